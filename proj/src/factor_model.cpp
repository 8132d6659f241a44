#include "dynemb/factor_model.hpp"

#include "dynemb/errors.hpp"
#include "dynemb/math.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace dynemb {

namespace {

double mean_over_seen(const Vector& v, const std::vector<std::uint8_t>& seen) {
  double sum = 0.0;
  std::size_t n = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (seen[static_cast<std::size_t>(i)]) {
      sum += v(i);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double predict_logit(const FactorModel& m, int student, int question) {
  double logit = 0.0;
  if (m.question_is_known(question)) {
    logit += m.b(question);
    if (m.student_is_known(student)) logit += m.W.row(question).dot(m.Z.row(student));
  } else {
    logit += m.mean_question_bias();
  }
  if (m.student_is_known(student)) logit += m.c(student);
  else logit += m.mean_student_bias();
  return logit;
}

void check_config(const MfTrainConfig& cfg) {
  if (cfg.dim < 1) throw ConfigError("dim must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.minibatch_size < 1) throw ConfigError("minibatch_size must be >= 1");
  if (cfg.learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (cfg.lambda < 0.0 || cfg.mu < 0.0) throw ConfigError("regularization weights must be >= 0");
  if (cfg.init_scale < 0.0) throw ConfigError("init_scale must be >= 0");
}

// Loss-term gradients plus the scaled l2 regularizer (the smooth part of the
// objective). Returns summed batch log loss.
double smooth_gradient(const FactorModel& m, std::span<const Interaction> batch,
                       std::size_t dataset_size, MfGradient& g) {
  g.W = Matrix::Zero(m.W.rows(), m.W.cols());
  g.Z = Matrix::Zero(m.Z.rows(), m.Z.cols());
  g.b = Vector::Zero(m.b.size());
  g.c = Vector::Zero(m.c.size());
  double loss = 0.0;
  for (const auto& it : batch) {
    if (it.question >= m.num_questions() || it.student >= m.num_students())
      throw DimensionError("mf gradient: batch index out of model range");
    const double logit = m.W.row(it.question).dot(m.Z.row(it.student)) + m.b(it.question) +
                         m.c(it.student);
    const Probability p = sigmoid(logit);
    loss += log_loss(it.response, p);
    const double err = p.value() - it.response;
    g.W.row(it.question) += err * m.Z.row(it.student);
    g.Z.row(it.student) += err * m.W.row(it.question);
    g.b(it.question) += err;
    g.c(it.student) += err;
  }
  const double scale = static_cast<double>(batch.size()) / static_cast<double>(dataset_size);
  g.W += scale * 2.0 * m.lambda * m.W;
  g.Z += scale * 2.0 * m.lambda * m.Z;
  return loss;
}

}  // namespace

FactorModel::FactorModel(int num_students, int num_questions, int d) {
  if (d < 1) throw InvalidArgument("FactorModel: d must be >= 1");
  dim = d;
  W = Matrix::Zero(num_questions, d);
  Z = Matrix::Zero(num_students, d);
  b = Vector::Zero(num_questions);
  c = Vector::Zero(num_students);
  question_seen.assign(static_cast<std::size_t>(num_questions), 1);
  student_seen.assign(static_cast<std::size_t>(num_students), 1);
}

double FactorModel::mean_question_bias() const { return mean_over_seen(b, question_seen); }
double FactorModel::mean_student_bias() const { return mean_over_seen(c, student_seen); }

Probability mf_predict(const FactorModel& m, int student, int question) {
  return sigmoid(predict_logit(m, student, question));
}

double mf_objective(const FactorModel& m, const Dataset& ds) {
  double loss = 0.0;
  for (const auto& it : ds.interactions) {
    if (it.question >= m.num_questions() || it.student >= m.num_students())
      throw DimensionError("mf_objective: dataset index out of model range");
    loss += log_loss(it.response, mf_predict(m, it.student, it.question));
  }
  return loss + m.lambda * (m.W.squaredNorm() + m.Z.squaredNorm()) +
         m.mu * m.W.cwiseAbs().sum();
}

MfGradient mf_gradient(const FactorModel& m, std::span<const Interaction> batch,
                       std::size_t dataset_size) {
  if (batch.empty()) throw InvalidArgument("mf_gradient: empty batch");
  if (dataset_size < batch.size())
    throw InvalidArgument("mf_gradient: dataset smaller than batch");
  MfGradient g;
  g.batch_loss = smooth_gradient(m, batch, dataset_size, g);
  if (m.mu > 0.0) {
    const double scale = static_cast<double>(batch.size()) / static_cast<double>(dataset_size);
    g.W += scale * m.mu * m.W.unaryExpr([](double w) {
      return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
    });
  }
  return g;
}

FactorModel train_mf(const Dataset& ds, const MfTrainConfig& cfg, SeededRng& rng,
                     MfTrainRecord* record) {
  if (ds.interactions.empty()) throw InvalidArgument("train_mf: empty dataset");
  check_config(cfg);
  if (cfg.init_mode == MfInit::kSkillOnehot) {
    if (!ds.has_skills()) throw ConfigError("skill_onehot init requires skill tags");
    if (cfg.dim != ds.num_skills)
      throw ConfigError("skill_onehot init requires dim == num_skills");
    for (const auto& it : ds.interactions) {
      if (ds.skill_of_question[static_cast<std::size_t>(it.question)] == kNoSkill)
        throw ConfigError("skill_onehot init: question without a skill tag");
    }
  }

  FactorModel m(ds.num_students, ds.num_questions, cfg.dim);
  m.lambda = cfg.lambda;
  m.mu = cfg.mu;
  if (cfg.init_mode == MfInit::kRandom) {
    for (Index i = 0; i < m.W.rows(); ++i)
      for (Index j = 0; j < m.W.cols(); ++j) m.W(i, j) = rng.normal(0.0, cfg.init_scale);
  } else {
    for (Index q = 0; q < m.W.rows(); ++q) {
      const int skill = ds.skill_of_question[static_cast<std::size_t>(q)];
      if (skill != kNoSkill) m.W(q, skill) = 1.0;
    }
  }
  for (Index i = 0; i < m.Z.rows(); ++i)
    for (Index j = 0; j < m.Z.cols(); ++j) m.Z(i, j) = rng.normal(0.0, cfg.init_scale);

  m.question_seen.assign(static_cast<std::size_t>(ds.num_questions), 0);
  m.student_seen.assign(static_cast<std::size_t>(ds.num_students), 0);
  for (const auto& it : ds.interactions) {
    m.question_seen[static_cast<std::size_t>(it.question)] = 1;
    m.student_seen[static_cast<std::size_t>(it.student)] = 1;
  }

  const std::size_t n = ds.interactions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Interaction> batch;
  MfGradient g;

  if (record) record->epoch_mean_loss.clear();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.minibatch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(ds.interactions[order[i]]);

      epoch_loss += smooth_gradient(m, batch, n, g);
      if (cfg.learning_rate > 0.0) {
        m.W -= cfg.learning_rate * g.W;
        m.Z -= cfg.learning_rate * g.Z;
        m.b -= cfg.learning_rate * g.b;
        m.c -= cfg.learning_rate * g.c;
        if (cfg.mu > 0.0) {
          const double scale = static_cast<double>(batch.size()) / static_cast<double>(n);
          const double t = cfg.learning_rate * cfg.mu * scale;
          m.W = m.W.unaryExpr([t](double w) { return soft_threshold(w, t); });
        }
      }
    }
    if (record) record->epoch_mean_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return m;
}

FactorModel online_update(const FactorModel& m, std::span<const Interaction> new_interactions,
                          const MfTrainConfig& cfg) {
  FactorModel out = m;
  if (new_interactions.empty()) return out;

  int max_student = 0;
  for (const auto& it : new_interactions) {
    if (it.question >= out.num_questions())
      throw DimensionError("online_update: unknown question index beyond model range");
    max_student = std::max(max_student, it.student);
  }
  if (max_student >= out.num_students()) {
    const Index old_n = out.Z.rows();
    out.Z.conservativeResize(max_student + 1, Eigen::NoChange);
    out.c.conservativeResize(max_student + 1);
    out.Z.bottomRows(max_student + 1 - old_n).setZero();
    out.c.tail(max_student + 1 - old_n).setZero();
    out.student_seen.resize(static_cast<std::size_t>(max_student + 1), 0);
  }

  // Fresh zero rows for students the model has not trained on; group each
  // student's new interactions, preserving first-appearance order.
  std::vector<int> touched;
  std::vector<std::vector<Interaction>> per_student;
  {
    std::unordered_map<int, std::size_t> slot;
    for (const auto& it : new_interactions) {
      auto [pos, inserted] = slot.try_emplace(it.student, touched.size());
      if (inserted) {
        touched.push_back(it.student);
        per_student.emplace_back();
        if (!out.student_seen[static_cast<std::size_t>(it.student)]) {
          out.Z.row(it.student).setZero();
          out.c(it.student) = 0.0;
          out.student_seen[static_cast<std::size_t>(it.student)] = 1;
        }
      }
      per_student[pos->second].push_back(it);
    }
  }

  if (!cfg.online_update_questions) {
    for (std::size_t i = 0; i < touched.size(); ++i) {
      const int s = touched[i];
      double cs = out.c(s);
      Vector z = out.Z.row(s).transpose();
      online_update_student(m, per_student[i], cfg, z, cs);
      out.Z.row(s) = z.transpose();
      out.c(s) = cs;
    }
    return out;
  }

  // Flagged variant: the question side joins the refit.
  for (int pass = 0; pass < cfg.epochs; ++pass) {
    Matrix gZ = Matrix::Zero(out.Z.rows(), out.Z.cols());
    Vector gc = Vector::Zero(out.c.size());
    Matrix gW = Matrix::Zero(out.W.rows(), out.W.cols());
    Vector gb = Vector::Zero(out.b.size());
    for (const auto& it : new_interactions) {
      const double logit = out.W.row(it.question).dot(out.Z.row(it.student)) +
                           out.b(it.question) + out.c(it.student);
      const double err = sigmoid(logit).value() - it.response;
      gZ.row(it.student) += err * out.W.row(it.question);
      gc(it.student) += err;
      gW.row(it.question) += err * out.Z.row(it.student);
      gb(it.question) += err;
      out.question_seen[static_cast<std::size_t>(it.question)] = 1;
    }
    for (int s : touched) {
      gZ.row(s) += 2.0 * cfg.lambda * out.Z.row(s);
      out.Z.row(s) -= cfg.learning_rate * gZ.row(s);
      out.c(s) -= cfg.learning_rate * gc(s);
    }
    gW += 2.0 * cfg.lambda * out.W;
    out.W -= cfg.learning_rate * gW;
    out.b -= cfg.learning_rate * gb;
  }
  return out;
}

void online_update_student(const FactorModel& question_side, std::span<const Interaction> items,
                           const MfTrainConfig& cfg, Eigen::Ref<Vector> z, double& c_s) {
  if (items.empty()) return;
  const double mean_b = question_side.mean_question_bias();
  for (int pass = 0; pass < cfg.epochs; ++pass) {
    Vector gz = 2.0 * cfg.lambda * z;
    double gc = 0.0;
    for (const auto& it : items) {
      double logit = c_s;
      const bool known = question_side.question_is_known(it.question);
      if (known) logit += question_side.W.row(it.question).dot(z) + question_side.b(it.question);
      else logit += mean_b;
      const double err = sigmoid(logit).value() - it.response;
      if (known) gz += err * question_side.W.row(it.question).transpose();
      gc += err;
    }
    z -= cfg.learning_rate * gz;
    c_s -= cfg.learning_rate * gc;
  }
}

}  // namespace dynemb
