#pragma once

#include "dynemb/config.hpp"
#include "dynemb/dataset.hpp"
#include "dynemb/dyn_model.hpp"
#include "dynemb/rng.hpp"
#include "dynemb/types.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dynemb {

// Probability that a uniformly random positive-negative pair is ordered
// correctly, ties counted 1/2. Rank-sum computation whose numerator is an
// exactly represented integer, so it matches brute-force pair counting
// bit for bit. Throws InvalidArgument when only one class is present.
double auc(std::span<const int> labels, std::span<const double> scores);

struct ScoredPrediction {
  int student = 0;
  int position = 0;
  int batch_round = 0;  // ordinal of the online batch within the student's scored region
  int label = 0;
  double score = 0.5;
};

struct BatchRow {
  int batch_index = 0;
  std::optional<double> auc;  // absent for single-class rounds
  std::size_t count = 0;
};

struct EvalReport {
  std::string protocol;
  std::string model_name;
  std::optional<double> auc;
  double mean_log_loss = 0.0;
  std::size_t num_scored = 0;
  std::vector<BatchRow> per_batch;  // pooled by batch round across students
  KvConfig config_echo;
};

struct EvalOutcome {
  EvalReport report;
  std::vector<ScoredPrediction> predictions;  // ordered by (student, position)
};

// Consumes one student's sequence during online evaluation. predict() must
// not look at the interaction's own response or anything after it.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual double predict(const Interaction& it) = 0;
  // Called for every interaction once scored (or skipped): state rolling is
  // part of prediction, not training.
  virtual void observe(const Interaction& it) = 0;
  // Batch-boundary parameter refit; a no-op for models without online fits.
  virtual void absorb(std::span<const Interaction> batch) {}
};

// A model-training procedure pluggable into the protocols: fits population
// parameters once, then hands out per-student scorers.
class OnlineEvaluator {
 public:
  virtual ~OnlineEvaluator() = default;
  virtual std::string name() const = 0;
  virtual void fit(const Dataset& train, SeededRng& rng) = 0;
  virtual std::unique_ptr<SequenceScorer> make_scorer(int student) const = 0;
};

// Online response prediction for held-out students: population parameters
// from `train`, then each test sequence is scored in order, in batches of
// batch_size, absorbing each batch before the next. The first interaction
// of each student is never scored.
EvalOutcome evaluate_new_user(const Dataset& train, const Dataset& test,
                              OnlineEvaluator& trainer, int batch_size, SeededRng& rng);

// Online response prediction for each student's chronological suffix of
// ceil(holdout_fraction * len) interactions; all earlier interactions from
// all students form the training data.
EvalOutcome evaluate_most_recent(const Dataset& ds, double holdout_fraction,
                                 OnlineEvaluator& trainer, int batch_size, SeededRng& rng);

// Report as a JSON document with the config echo embedded.
void save_report(const EvalReport& report, const std::string& path);
std::string report_to_json(const EvalReport& report);

// CSV rows `epoch,train_log_loss,test_log_loss`, one per epoch.
void save_learning_curves(const std::vector<CurvePoint>& curve, const std::string& path);

}  // namespace dynemb
