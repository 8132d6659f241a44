#pragma once

#include "dynemb/dataset.hpp"
#include "dynemb/factor_model.hpp"
#include "dynemb/lstm.hpp"
#include "dynemb/rng.hpp"
#include "dynemb/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dynemb {

enum class EncoderMode {
  kQuestionOnly,    // LSTM input built from the frozen question embedding
  kConcatTags,      // question embedding fused with the skill one-hot via FC+ReLU
  kSkillOnehotDkt,  // DKT baseline: one-hot skill input, per-skill output layer
};

// FC layer fusing [question embedding; skill one-hot] into the LSTM input.
struct FusionParams {
  Matrix fc_weights;  // out_dim x (d + num_skills)
  Vector fc_bias;     // out_dim
  int out_dim = 0;
};

// Dynamic student-state tracker. The LSTM hidden state is the dynamic
// student embedding; the question side (frozen_W, frozen_b) is carried from
// phase-one training and stays fixed unless trained end to end.
struct DynModel {
  LstmParams lstm;
  Matrix frozen_W;  // M x d
  Vector frozen_b;  // M
  std::vector<std::uint8_t> question_seen;
  std::optional<FusionParams> fusion;
  EncoderMode encoder_mode = EncoderMode::kQuestionOnly;
  std::vector<int> skill_of_question;  // per question, kNoSkill allowed
  int num_skills = 0;
  Matrix out_weights;  // num_skills x hidden_dim, DKT mode only
  Vector out_bias;     // num_skills, DKT mode only

  int embedding_dim() const { return static_cast<int>(frozen_W.cols()); }
  int num_questions() const { return static_cast<int>(frozen_W.rows()); }
  bool question_is_known(int q) const {
    return q >= 0 && q < num_questions() && question_seen[static_cast<std::size_t>(q)];
  }
  double mean_frozen_bias() const;
  int skill_of(int q) const {
    return (q >= 0 && q < static_cast<int>(skill_of_question.size()))
               ? skill_of_question[static_cast<std::size_t>(q)]
               : kNoSkill;
  }
};

// Per-mode question encoding; unknown questions fall back to the cold-start
// embedding (all zeros).
Vector encode_question(const DynModel& model, int question);

// kron([r, 1-r], e): the r block carries e after a correct response, the
// (1-r) block after an incorrect one.
Vector encode_input(const Vector& encoded_question, int response);

// sigmoid(<frozen_W_q, h> + frozen_b_q); DKT mode scores through its
// per-skill output layer instead.
Probability predict_next(const StudentState& st, const DynModel& model, int question);

struct DynTrainConfig {
  double learning_rate = 0.1;
  int epochs = 10;
  int minibatch_size = 32;  // student sequences per batch
  int truncation_len = 100; // BPTT window
  double grad_clip = 5.0;   // per-parameter-vector L2 clip
  int hidden_dim = 50;      // must equal d outside DKT mode
  int fusion_out_dim = 0;   // 0 -> hidden_dim
  double e2e_init_scale = 0.1;  // random question-side init for end-to-end
};

struct CurvePoint {
  int epoch = 0;
  double train_log_loss = 0.0;  // mean over the epoch's scored terms
  double test_log_loss = 0.0;   // holdout loss before the epoch's updates
};

struct DynTrainRecord {
  std::vector<CurvePoint> curve;
};

// Phase two of the two-phase strategy: BPTT on next-response log loss with
// the question side frozen. The first response of each sequence is never
// scored. Holdout, when given, is evaluated into the training record.
DynModel train_student_dyn(const Dataset& ds, const FactorModel& fm, const DynTrainConfig& cfg,
                           SeededRng& rng, EncoderMode mode = EncoderMode::kQuestionOnly,
                           const Dataset* holdout = nullptr, DynTrainRecord* record = nullptr);

enum class E2eInit { kRandom, kFromPretrained };

// Same loop with the question side trainable. kFromPretrained requires a
// phase-one model.
DynModel train_end_to_end(const Dataset& ds, const DynTrainConfig& cfg, E2eInit init,
                          const FactorModel* pretrained, SeededRng& rng,
                          EncoderMode mode = EncoderMode::kQuestionOnly,
                          const Dataset* holdout = nullptr, DynTrainRecord* record = nullptr);

// DKT baseline: one-hot skill inputs into the same LSTM, per-skill output
// layer trained jointly.
DynModel train_dkt(const Dataset& ds, const DynTrainConfig& cfg, SeededRng& rng,
                   const Dataset* holdout = nullptr, DynTrainRecord* record = nullptr);

// Mean log loss over all scored steps (position >= 1), states rolled from
// zero through each student's sequence.
double dyn_log_loss(const DynModel& model, const Dataset& ds);

// Which parameter groups receive updates.
struct DynTrainables {
  bool lstm = true;
  bool fusion = true;
  bool question_side = false;
  bool out_layer = false;
};

struct DynGradient {
  LstmParams lstm;
  Matrix fc_weights;
  Vector fc_bias;
  Matrix frozen_W;
  Vector frozen_b;
  Matrix out_weights;
  Vector out_bias;
  double loss_sum = 0.0;
  std::size_t scored = 0;
};

// Loss (mean over scored terms) and its gradient for the given student
// sequences; full BPTT when truncation_len covers the sequences. Exposed for
// finite-difference verification.
DynGradient dyn_batch_gradient(const DynModel& model, const Dataset& ds,
                               std::span<const int> students, int truncation_len,
                               const DynTrainables& trainables);
double dyn_batch_loss(const DynModel& model, const Dataset& ds, std::span<const int> students);

}  // namespace dynemb
