#include "dynemb/dyn_model.hpp"

#include "dynemb/errors.hpp"
#include "dynemb/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace dynemb {

namespace {

double mean_entry(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.sum() / static_cast<double>(v.size());
}

Vector onehot(int index, int size) {
  Vector v = Vector::Zero(size);
  if (index >= 0 && index < size) v(index) = 1.0;
  return v;
}

// Per-step values kept for the backward pass.
struct CellCache {
  int q_prev = 0;
  int r_prev = 0;
  int q_target = 0;
  int r_target = 0;
  Vector concat_in;  // concat mode: [W_q; onehot(skill)]
  Vector fc_pre;     // concat mode: FC pre-activation
  Vector encoded;
  LstmStepCache lstm;
  double p = 0.5;
};

double prediction_logit(const DynModel& model, const Vector& h, int question) {
  if (model.encoder_mode == EncoderMode::kSkillOnehotDkt) {
    const int skill = model.skill_of(question);
    if (skill == kNoSkill) return mean_entry(model.out_bias);  // cold start
    return dot(model.out_weights.row(skill).transpose(), h) + model.out_bias(skill);
  }
  if (!model.question_is_known(question)) return model.mean_frozen_bias();
  return dot(model.frozen_W.row(question).transpose(), h) + model.frozen_b(question);
}

void check_tags_for_mode(const Dataset& ds, EncoderMode mode) {
  if (mode == EncoderMode::kQuestionOnly) return;
  if (!ds.has_skills())
    throw ConfigError("encoder mode requires skill tags but the dataset has none");
  for (const auto& it : ds.interactions) {
    if (ds.skill_of_question[static_cast<std::size_t>(it.question)] == kNoSkill)
      throw ConfigError("encoder mode requires a skill tag on every question");
  }
}

void clip_to_norm(Matrix& g, double clip) {
  if (clip <= 0.0) return;
  const double n = g.norm();
  if (n > clip) g *= clip / n;
}

void clip_to_norm(Vector& g, double clip) {
  if (clip <= 0.0) return;
  const double n = g.norm();
  if (n > clip) g *= clip / n;
}

DynGradient zero_gradient(const DynModel& model) {
  DynGradient g;
  g.lstm = LstmParams::zero(model.lstm.input_dim, model.lstm.hidden_dim);
  if (model.fusion) {
    g.fc_weights = Matrix::Zero(model.fusion->fc_weights.rows(), model.fusion->fc_weights.cols());
    g.fc_bias = Vector::Zero(model.fusion->fc_bias.size());
  }
  g.frozen_W = Matrix::Zero(model.frozen_W.rows(), model.frozen_W.cols());
  g.frozen_b = Vector::Zero(model.frozen_b.size());
  if (model.encoder_mode == EncoderMode::kSkillOnehotDkt) {
    g.out_weights = Matrix::Zero(model.out_weights.rows(), model.out_weights.cols());
    g.out_bias = Vector::Zero(model.out_bias.size());
  }
  return g;
}

// Forward+backward over one sequence in truncation windows. Gradients of
// each scored term are scaled by 1/norm so the batch gradient is the
// gradient of the mean scored loss.
void backprop_sequence(const DynModel& model, std::span<const Interaction> seq,
                       int truncation_len, double norm, const DynTrainables& tr,
                       DynGradient& grads, double& loss_sum, std::size_t& scored) {
  const auto total = static_cast<std::size_t>(seq.size());
  if (total < 2) return;
  const int hidden = model.lstm.hidden_dim;
  const int enc_dim = model.lstm.input_dim / 2;

  StudentState state = StudentState::zero(hidden);
  std::vector<CellCache> cells;
  std::size_t t = 1;
  while (t < total) {
    const std::size_t stop =
        std::min(total, t + static_cast<std::size_t>(std::max(1, truncation_len)));
    cells.clear();
    cells.resize(stop - t);
    for (std::size_t u = t; u < stop; ++u) {
      CellCache& cell = cells[u - t];
      const Interaction& prev = seq[u - 1];
      const Interaction& cur = seq[u];
      cell.q_prev = prev.question;
      cell.r_prev = prev.response;
      cell.q_target = cur.question;
      cell.r_target = cur.response;
      if (model.encoder_mode == EncoderMode::kConcatTags) {
        const int d = model.embedding_dim();
        cell.concat_in.resize(d + model.num_skills);
        cell.concat_in.head(d) = model.question_is_known(prev.question)
                                     ? model.frozen_W.row(prev.question).transpose()
                                     : Vector::Zero(d);
        cell.concat_in.tail(model.num_skills) =
            onehot(model.skill_of(prev.question), model.num_skills);
        cell.fc_pre = model.fusion->fc_weights * cell.concat_in + model.fusion->fc_bias;
        cell.encoded = cell.fc_pre.cwiseMax(0.0);
      } else {
        cell.encoded = encode_question(model, prev.question);
      }
      state = lstm_step_cached(model.lstm, state, encode_input(cell.encoded, prev.response),
                               cell.lstm);
      cell.p = sigmoid(prediction_logit(model, state.h, cur.question)).value();
      loss_sum += log_loss(cur.response, Probability(cell.p));
      ++scored;
    }

    Vector dh_carry = Vector::Zero(hidden);
    Vector dc_carry = Vector::Zero(hidden);
    Vector dx(model.lstm.input_dim), dh_prev(hidden), dc_prev(hidden);
    for (std::size_t u = stop; u-- > t;) {
      const CellCache& cell = cells[u - t];
      const double dlogit = (cell.p - cell.r_target) / norm;

      Vector dh = dh_carry;
      if (model.encoder_mode == EncoderMode::kSkillOnehotDkt) {
        const int skill = model.skill_of(cell.q_target);
        if (skill != kNoSkill) {
          dh += dlogit * model.out_weights.row(skill).transpose();
          if (tr.out_layer) {
            grads.out_weights.row(skill) += dlogit * cell.lstm.h.transpose();
            grads.out_bias(skill) += dlogit;
          }
        }
      } else if (model.question_is_known(cell.q_target)) {
        dh += dlogit * model.frozen_W.row(cell.q_target).transpose();
        if (tr.question_side) {
          grads.frozen_W.row(cell.q_target) += dlogit * cell.lstm.h.transpose();
          grads.frozen_b(cell.q_target) += dlogit;
        }
      }

      lstm_step_backward(model.lstm, cell.lstm, dh, dc_carry, grads.lstm, dx, dh_prev, dc_prev);

      // Through kron([r, 1-r], e): only the active block carries gradient.
      const Vector de = cell.r_prev == 1 ? dx.head(enc_dim) : dx.tail(enc_dim);
      if (model.encoder_mode == EncoderMode::kConcatTags) {
        const Vector dpre =
            de.cwiseProduct(cell.fc_pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        if (tr.fusion) {
          grads.fc_weights.noalias() += dpre * cell.concat_in.transpose();
          grads.fc_bias += dpre;
        }
        if (tr.question_side && model.question_is_known(cell.q_prev)) {
          const Vector dcat = model.fusion->fc_weights.transpose() * dpre;
          grads.frozen_W.row(cell.q_prev) += dcat.head(model.embedding_dim()).transpose();
        }
      } else if (model.encoder_mode == EncoderMode::kQuestionOnly) {
        if (tr.question_side && model.question_is_known(cell.q_prev))
          grads.frozen_W.row(cell.q_prev) += de.transpose();
      }

      dh_carry = dh_prev;
      dc_carry = dc_prev;
    }
    t = stop;
  }
}

void apply_update(DynModel& model, DynGradient& g, const DynTrainables& tr, double lr,
                  double clip) {
  if (lr == 0.0) return;
  if (tr.lstm) {
    for (auto [gm, pm] : {std::pair{&g.lstm.w_input, &model.lstm.w_input},
                          std::pair{&g.lstm.w_forget, &model.lstm.w_forget},
                          std::pair{&g.lstm.w_output, &model.lstm.w_output},
                          std::pair{&g.lstm.w_candidate, &model.lstm.w_candidate}}) {
      clip_to_norm(*gm, clip);
      *pm -= lr * *gm;
    }
    for (auto [gv, pv] : {std::pair{&g.lstm.b_input, &model.lstm.b_input},
                          std::pair{&g.lstm.b_forget, &model.lstm.b_forget},
                          std::pair{&g.lstm.b_output, &model.lstm.b_output},
                          std::pair{&g.lstm.b_candidate, &model.lstm.b_candidate}}) {
      clip_to_norm(*gv, clip);
      *pv -= lr * *gv;
    }
  }
  if (tr.fusion && model.fusion) {
    clip_to_norm(g.fc_weights, clip);
    clip_to_norm(g.fc_bias, clip);
    model.fusion->fc_weights -= lr * g.fc_weights;
    model.fusion->fc_bias -= lr * g.fc_bias;
  }
  if (tr.question_side) {
    clip_to_norm(g.frozen_W, clip);
    clip_to_norm(g.frozen_b, clip);
    model.frozen_W -= lr * g.frozen_W;
    model.frozen_b -= lr * g.frozen_b;
  }
  if (tr.out_layer && model.encoder_mode == EncoderMode::kSkillOnehotDkt) {
    clip_to_norm(g.out_weights, clip);
    clip_to_norm(g.out_bias, clip);
    model.out_weights -= lr * g.out_weights;
    model.out_bias -= lr * g.out_bias;
  }
}

void check_dyn_config(const DynTrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.minibatch_size < 1) throw ConfigError("minibatch_size must be >= 1");
  if (cfg.truncation_len < 1) throw ConfigError("truncation_len must be >= 1");
  if (cfg.learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (cfg.hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
}

DynModel build_model(const Dataset& ds, Matrix W, Vector b, std::vector<std::uint8_t> seen,
                     EncoderMode mode, const DynTrainConfig& cfg, SeededRng& rng) {
  check_tags_for_mode(ds, mode);
  DynModel model;
  model.encoder_mode = mode;
  model.frozen_W = std::move(W);
  model.frozen_b = std::move(b);
  model.question_seen = std::move(seen);
  model.skill_of_question = ds.skill_of_question;
  model.num_skills = ds.num_skills;

  const int hidden = cfg.hidden_dim;
  int input_dim = 0;
  switch (mode) {
    case EncoderMode::kQuestionOnly: {
      if (model.embedding_dim() != hidden)
        throw ConfigError("hidden_dim must equal the embedding dimension d");
      input_dim = 2 * hidden;
      break;
    }
    case EncoderMode::kConcatTags: {
      if (model.embedding_dim() != hidden)
        throw ConfigError("hidden_dim must equal the embedding dimension d");
      const int out_dim = cfg.fusion_out_dim > 0 ? cfg.fusion_out_dim : hidden;
      const int in_dim = model.embedding_dim() + ds.num_skills;
      FusionParams fusion;
      fusion.out_dim = out_dim;
      fusion.fc_weights = Matrix(out_dim, in_dim);
      const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
      for (Index i = 0; i < fusion.fc_weights.rows(); ++i)
        for (Index j = 0; j < fusion.fc_weights.cols(); ++j)
          fusion.fc_weights(i, j) = rng.uniform(-bound, bound);
      fusion.fc_bias = Vector::Zero(out_dim);
      model.fusion = std::move(fusion);
      input_dim = 2 * out_dim;
      break;
    }
    case EncoderMode::kSkillOnehotDkt: {
      input_dim = 2 * ds.num_skills;
      model.out_weights = Matrix(ds.num_skills, hidden);
      const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
      for (Index i = 0; i < model.out_weights.rows(); ++i)
        for (Index j = 0; j < model.out_weights.cols(); ++j)
          model.out_weights(i, j) = rng.uniform(-bound, bound);
      model.out_bias = Vector::Zero(ds.num_skills);
      break;
    }
  }
  model.lstm = LstmParams::init(input_dim, hidden, rng);
  return model;
}

void train_engine(DynModel& model, const Dataset& ds, const DynTrainConfig& cfg, SeededRng& rng,
                  const DynTrainables& tr, const Dataset* holdout, DynTrainRecord* record) {
  std::vector<int> trainable_students;
  for (int s = 0; s < ds.num_students; ++s) {
    const auto [first, last] = ds.student_range(s);
    if (last - first >= 2) trainable_students.push_back(s);
  }
  if (trainable_students.empty())
    throw InvalidArgument("dyn training: no student has two or more interactions");

  if (record) record->curve.clear();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double test_loss =
        holdout != nullptr ? dyn_log_loss(model, *holdout) : std::numeric_limits<double>::quiet_NaN();

    rng.shuffle(trainable_students);
    double epoch_loss = 0.0;
    std::size_t epoch_scored = 0;
    for (std::size_t start = 0; start < trainable_students.size();
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t stop = std::min(trainable_students.size(),
                                        start + static_cast<std::size_t>(cfg.minibatch_size));
      const std::span<const int> batch(trainable_students.data() + start, stop - start);
      DynGradient g = dyn_batch_gradient(model, ds, batch, cfg.truncation_len, tr);
      epoch_loss += g.loss_sum;
      epoch_scored += g.scored;
      apply_update(model, g, tr, cfg.learning_rate, cfg.grad_clip);
    }
    if (record)
      record->curve.push_back(
          {epoch, epoch_loss / static_cast<double>(std::max<std::size_t>(1, epoch_scored)),
           test_loss});
  }
}

}  // namespace

double DynModel::mean_frozen_bias() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (Index i = 0; i < frozen_b.size(); ++i) {
    if (question_seen[static_cast<std::size_t>(i)]) {
      sum += frozen_b(i);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

Vector encode_question(const DynModel& model, int question) {
  switch (model.encoder_mode) {
    case EncoderMode::kQuestionOnly:
      return model.question_is_known(question) ? model.frozen_W.row(question).transpose()
                                               : Vector::Zero(model.embedding_dim()).eval();
    case EncoderMode::kConcatTags: {
      if (!model.fusion) throw ConfigError("concat_tags mode without fusion parameters");
      if (model.skill_of_question.empty())
        throw ConfigError("concat_tags mode requires skill tags");
      const int d = model.embedding_dim();
      Vector concat(d + model.num_skills);
      concat.head(d) = model.question_is_known(question)
                           ? model.frozen_W.row(question).transpose()
                           : Vector::Zero(d);
      concat.tail(model.num_skills) = onehot(model.skill_of(question), model.num_skills);
      return (model.fusion->fc_weights * concat + model.fusion->fc_bias).cwiseMax(0.0);
    }
    case EncoderMode::kSkillOnehotDkt: {
      if (model.skill_of_question.empty())
        throw ConfigError("skill_onehot_dkt mode requires skill tags");
      return onehot(model.skill_of(question), model.num_skills);
    }
  }
  throw ConfigError("unhandled encoder mode");
}

Vector encode_input(const Vector& encoded_question, int response) {
  if (response != 0 && response != 1)
    throw InvalidArgument("encode_input: response must be 0 or 1");
  const Index e = encoded_question.size();
  Vector x = Vector::Zero(2 * e);
  if (response == 1) x.head(e) = encoded_question;
  else x.tail(e) = encoded_question;
  return x;
}

Probability predict_next(const StudentState& st, const DynModel& model, int question) {
  return sigmoid(prediction_logit(model, st.h, question));
}

DynGradient dyn_batch_gradient(const DynModel& model, const Dataset& ds,
                               std::span<const int> students, int truncation_len,
                               const DynTrainables& trainables) {
  DynGradient g = zero_gradient(model);
  std::size_t norm_scored = 0;
  for (int s : students) {
    const auto [first, last] = ds.student_range(s);
    if (last - first >= 2) norm_scored += last - first - 1;
  }
  if (norm_scored == 0) return g;
  for (int s : students) {
    const auto [first, last] = ds.student_range(s);
    backprop_sequence(model,
                      std::span<const Interaction>(ds.interactions.data() + first, last - first),
                      truncation_len, static_cast<double>(norm_scored), trainables, g, g.loss_sum,
                      g.scored);
  }
  return g;
}

double dyn_batch_loss(const DynModel& model, const Dataset& ds, std::span<const int> students) {
  double loss = 0.0;
  std::size_t scored = 0;
  for (int s : students) {
    const auto [first, last] = ds.student_range(s);
    if (last - first < 2) continue;
    StudentState state = StudentState::zero(model.lstm.hidden_dim);
    for (std::size_t u = first + 1; u < last; ++u) {
      const Interaction& prev = ds.interactions[u - 1];
      const Interaction& cur = ds.interactions[u];
      state = lstm_step(model.lstm, state, encode_input(encode_question(model, prev.question),
                                                        prev.response));
      loss += log_loss(cur.response, predict_next(state, model, cur.question));
      ++scored;
    }
  }
  return scored == 0 ? std::numeric_limits<double>::quiet_NaN()
                     : loss / static_cast<double>(scored);
}

double dyn_log_loss(const DynModel& model, const Dataset& ds) {
  std::vector<int> all(static_cast<std::size_t>(ds.num_students));
  std::iota(all.begin(), all.end(), 0);
  return dyn_batch_loss(model, ds, all);
}

DynModel train_student_dyn(const Dataset& ds, const FactorModel& fm, const DynTrainConfig& cfg,
                           SeededRng& rng, EncoderMode mode, const Dataset* holdout,
                           DynTrainRecord* record) {
  if (mode == EncoderMode::kSkillOnehotDkt)
    throw ConfigError("train_student_dyn does not drive the DKT baseline; use train_dkt");
  check_dyn_config(cfg);
  if (fm.dim != cfg.hidden_dim)
    throw ConfigError("hidden_dim must equal the pretrained embedding dimension");
  if (fm.num_questions() != ds.num_questions)
    throw DimensionError("pretrained model question count does not match the dataset");

  DynModel model = build_model(ds, fm.W, fm.b, fm.question_seen, mode, cfg, rng);
  const DynTrainables tr{.lstm = true, .fusion = true, .question_side = false, .out_layer = false};
  train_engine(model, ds, cfg, rng, tr, holdout, record);
  return model;
}

DynModel train_end_to_end(const Dataset& ds, const DynTrainConfig& cfg, E2eInit init,
                          const FactorModel* pretrained, SeededRng& rng, EncoderMode mode,
                          const Dataset* holdout, DynTrainRecord* record) {
  if (mode == EncoderMode::kSkillOnehotDkt)
    throw ConfigError("train_end_to_end does not drive the DKT baseline; use train_dkt");
  check_dyn_config(cfg);

  Matrix W;
  Vector b;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(ds.num_questions), 1);
  if (init == E2eInit::kFromPretrained) {
    if (pretrained == nullptr)
      throw ConfigError("end-to-end from pretrained requires a phase-one model");
    if (pretrained->dim != cfg.hidden_dim)
      throw ConfigError("hidden_dim must equal the pretrained embedding dimension");
    if (pretrained->num_questions() != ds.num_questions)
      throw DimensionError("pretrained model question count does not match the dataset");
    W = pretrained->W;
    b = pretrained->b;
    seen = pretrained->question_seen;
  } else {
    W = Matrix(ds.num_questions, cfg.hidden_dim);
    for (Index i = 0; i < W.rows(); ++i)
      for (Index j = 0; j < W.cols(); ++j) W(i, j) = rng.normal(0.0, cfg.e2e_init_scale);
    b = Vector::Zero(ds.num_questions);
  }

  DynModel model = build_model(ds, std::move(W), std::move(b), std::move(seen), mode, cfg, rng);
  const DynTrainables tr{.lstm = true, .fusion = true, .question_side = true, .out_layer = false};
  train_engine(model, ds, cfg, rng, tr, holdout, record);
  return model;
}

DynModel train_dkt(const Dataset& ds, const DynTrainConfig& cfg, SeededRng& rng,
                   const Dataset* holdout, DynTrainRecord* record) {
  check_dyn_config(cfg);
  DynModel model = build_model(ds, Matrix::Zero(ds.num_questions, cfg.hidden_dim),
                               Vector::Zero(ds.num_questions),
                               std::vector<std::uint8_t>(static_cast<std::size_t>(ds.num_questions), 1),
                               EncoderMode::kSkillOnehotDkt, cfg, rng);
  const DynTrainables tr{.lstm = true, .fusion = false, .question_side = false, .out_layer = true};
  train_engine(model, ds, cfg, rng, tr, holdout, record);
  return model;
}

}  // namespace dynemb
