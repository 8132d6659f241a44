#pragma once

#include "dynemb/dataset.hpp"
#include "dynemb/rng.hpp"
#include "dynemb/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace dynemb {

enum class MfInit { kRandom, kSkillOnehot };

struct MfTrainConfig {
  int dim = 8;  // embedding dimension d
  double learning_rate = 0.01;
  int epochs = 10;
  int minibatch_size = 128;
  double init_scale = 0.1;   // stddev of random init entries
  double lambda = 0.1;       // l2 weight on W and Z
  double mu = 0.0;           // l1 weight on W, 0 disables
  MfInit init_mode = MfInit::kRandom;
  // Resolved open point: online refits freeze the question side by default;
  // enabling this lets online_update touch W and b as well. The evaluation
  // protocols never enable it (question updates would leak across students).
  bool online_update_questions = false;
};

// Static question/student embeddings plus bias vectors. Rows of W pair with
// rows of Z through the logistic link. Immutable once trained; share
// read-only across threads.
struct FactorModel {
  Matrix W;  // M x d question embeddings
  Matrix Z;  // N x d student embeddings
  Vector b;  // M question biases
  Vector c;  // N student biases
  int dim = 0;
  double lambda = 0.0;
  double mu = 0.0;
  // Rows backed by training data. Untouched rows score through the
  // cold-start rule: zero embedding plus the mean bias of seen rows.
  std::vector<std::uint8_t> question_seen;
  std::vector<std::uint8_t> student_seen;

  FactorModel() = default;
  // Zero parameters, every row marked seen (hand-built model semantics).
  FactorModel(int num_students, int num_questions, int d);

  int num_students() const { return static_cast<int>(Z.rows()); }
  int num_questions() const { return static_cast<int>(W.rows()); }

  bool question_is_known(int q) const {
    return q >= 0 && q < num_questions() && question_seen[static_cast<std::size_t>(q)];
  }
  bool student_is_known(int s) const {
    return s >= 0 && s < num_students() && student_seen[static_cast<std::size_t>(s)];
  }

  double mean_question_bias() const;
  double mean_student_bias() const;
};

// sigmoid(<W_q, Z_s> + b_q + c_s). Unknown/unseen IDs are handled, not
// rejected: they contribute a zero embedding and the mean bias of their side.
Probability mf_predict(const FactorModel& m, int student, int question);

// Sum of log losses plus lambda*(|W|_F^2 + |Z|_F^2) + mu*|W|_1.
double mf_objective(const FactorModel& m, const Dataset& ds);

struct MfGradient {
  Matrix W, Z;
  Vector b, c;
  double batch_loss = 0.0;  // summed log loss over the batch
};

// Exact gradient of the batch's loss terms plus the full regularizer scaled
// by batch_size/dataset_size. The l1 term contributes subgradient sign(W)
// with sign(0) = 0. Batch entries must reference rows of the model.
MfGradient mf_gradient(const FactorModel& m, std::span<const Interaction> batch,
                       std::size_t dataset_size);

struct MfTrainRecord {
  std::vector<double> epoch_mean_loss;  // mean log loss per epoch, pre-update forwards
};

// Minibatch SGD on shuffled interactions. With mu > 0 each step is followed
// by proximal soft-thresholding of W, producing exact zeros. skill_onehot
// init requires d == num_skills and a tag on every question in the data.
FactorModel train_mf(const Dataset& ds, const MfTrainConfig& cfg, SeededRng& rng,
                     MfTrainRecord* record = nullptr);

// Student-side refit on new interactions: W and b stay frozen (unless
// cfg.online_update_questions), student rows and biases take cfg.epochs
// full-batch gradient-descent passes on the new loss plus lambda*|Z_s|^2.
// Unknown students get fresh zero-initialized rows.
FactorModel online_update(const FactorModel& m, std::span<const Interaction> new_interactions,
                          const MfTrainConfig& cfg);

// Per-student core of online_update, shared with the evaluation scorers:
// updates one student's row/bias in place against frozen question parameters.
void online_update_student(const FactorModel& question_side, std::span<const Interaction> items,
                           const MfTrainConfig& cfg, Eigen::Ref<Vector> z, double& c_s);

}  // namespace dynemb
