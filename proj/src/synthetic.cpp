#include "dynemb/synthetic.hpp"

#include "dynemb/errors.hpp"
#include "dynemb/math.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <string>

namespace dynemb {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const auto cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index jj = 0; jj < cols; ++jj) m(i, jj) = j.at(i).at(jj).get<double>();
  return m;
}

}  // namespace

std::pair<Dataset, GroundTruth> generate_synthetic(const SyntheticConfig& cfg, SeededRng& rng) {
  if (cfg.num_students < 1 || cfg.num_questions < 1 || cfg.dim < 1 || cfg.seq_len < 1)
    throw InvalidArgument("generate_synthetic: counts must be positive");
  if (cfg.drift_rate < 0.0 || cfg.learn_gain < 0.0)
    throw InvalidArgument("generate_synthetic: rates must be >= 0");
  const bool tagged = cfg.num_skills > 0;
  if (tagged && cfg.dim != cfg.num_skills)
    throw InvalidArgument("generate_synthetic: tagged mode requires dim == num_skills");

  const int n = cfg.num_students;
  const int m = cfg.num_questions;
  const int d = cfg.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  GroundTruth gt;
  gt.config = cfg;
  gt.true_question_embeddings = Matrix(m, d);
  gt.true_question_biases = Vector(m);
  if (tagged) {
    // Each question sits on its skill axis, plus optional within-skill spread.
    for (int q = 0; q < m; ++q) {
      const int skill = q % cfg.num_skills;
      for (int j = 0; j < d; ++j) {
        double w = cfg.within_skill_noise > 0.0 ? rng.normal(0.0, cfg.within_skill_noise * scale)
                                                : 0.0;
        if (j == skill) w += cfg.skill_axis_scale;
        gt.true_question_embeddings(q, j) = w;
      }
      gt.true_question_biases(q) = rng.normal(0.0, scale);
    }
  } else {
    for (int q = 0; q < m; ++q) {
      for (int j = 0; j < d; ++j) gt.true_question_embeddings(q, j) = rng.normal(0.0, scale);
      gt.true_question_biases(q) = rng.normal(0.0, scale);
    }
  }

  Dataset ds;
  // Vocabularies interned up front so dense index == generator index.
  for (int s = 0; s < n; ++s) ds.students.intern("s" + std::to_string(s));
  for (int q = 0; q < m; ++q) ds.questions.intern("q" + std::to_string(q));
  if (tagged)
    for (int k = 0; k < cfg.num_skills; ++k) ds.skills.intern("k" + std::to_string(k));

  gt.ability_trajectories.reserve(static_cast<std::size_t>(n));
  gt.true_probabilities.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(cfg.seq_len));
  for (int s = 0; s < n; ++s) {
    Vector z(d);
    for (int j = 0; j < d; ++j) z(j) = rng.normal(0.0, scale);
    Matrix trajectory(cfg.seq_len, d);
    for (int t = 0; t < cfg.seq_len; ++t) {
      const int q = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m)));
      trajectory.row(t) = z.transpose();
      const double p =
          logistic(gt.true_question_embeddings.row(q).dot(z) + gt.true_question_biases(q));
      const int r = rng.uniform() < p ? 1 : 0;
      gt.true_probabilities.push_back(p);

      Interaction it;
      it.student = s;
      it.question = q;
      it.response = r;
      it.skill = tagged ? q % cfg.num_skills : kNoSkill;
      ds.interactions.push_back(it);

      if (cfg.drift_rate > 0.0) {
        for (int j = 0; j < d; ++j) z(j) += cfg.drift_rate * rng.normal(0.0, scale);
      }
      if (r == 0 && cfg.learn_gain > 0.0) {
        // Learning from mistakes: move along the question direction.
        const double norm = gt.true_question_embeddings.row(q).norm();
        if (norm > 0.0)
          z += (cfg.learn_gain / norm) * gt.true_question_embeddings.row(q).transpose();
      }
    }
    gt.ability_trajectories.push_back(std::move(trajectory));
  }

  ds.finalize();
  if (tagged) {
    for (int q = 0; q < m; ++q)
      ds.skill_of_question[static_cast<std::size_t>(q)] = q % cfg.num_skills;
  }
  return {std::move(ds), std::move(gt)};
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
  json j;
  j["config"] = {{"num_students", gt.config.num_students},
                 {"num_questions", gt.config.num_questions},
                 {"dim", gt.config.dim},
                 {"seq_len", gt.config.seq_len},
                 {"drift_rate", gt.config.drift_rate},
                 {"learn_gain", gt.config.learn_gain},
                 {"num_skills", gt.config.num_skills},
                 {"skill_axis_scale", gt.config.skill_axis_scale},
                 {"within_skill_noise", gt.config.within_skill_noise}};
  j["question_embeddings"] = matrix_to_json(gt.true_question_embeddings);
  json biases = json::array();
  for (Index i = 0; i < gt.true_question_biases.size(); ++i)
    biases.push_back(gt.true_question_biases(i));
  j["question_biases"] = std::move(biases);
  json trajectories = json::array();
  for (const auto& t : gt.ability_trajectories) trajectories.push_back(matrix_to_json(t));
  j["ability_trajectories"] = std::move(trajectories);
  j["true_probabilities"] = gt.true_probabilities;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  out << j.dump(1) << '\n';
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  json j;
  in >> j;

  GroundTruth gt;
  const auto& c = j.at("config");
  gt.config.num_students = c.at("num_students").get<int>();
  gt.config.num_questions = c.at("num_questions").get<int>();
  gt.config.dim = c.at("dim").get<int>();
  gt.config.seq_len = c.at("seq_len").get<int>();
  gt.config.drift_rate = c.at("drift_rate").get<double>();
  gt.config.learn_gain = c.at("learn_gain").get<double>();
  gt.config.num_skills = c.at("num_skills").get<int>();
  gt.config.skill_axis_scale = c.at("skill_axis_scale").get<double>();
  gt.config.within_skill_noise = c.at("within_skill_noise").get<double>();
  gt.true_question_embeddings = matrix_from_json(j.at("question_embeddings"));
  const auto& biases = j.at("question_biases");
  gt.true_question_biases = Vector(static_cast<Index>(biases.size()));
  for (Index i = 0; i < gt.true_question_biases.size(); ++i)
    gt.true_question_biases(i) = biases.at(static_cast<std::size_t>(i)).get<double>();
  for (const auto& t : j.at("ability_trajectories"))
    gt.ability_trajectories.push_back(matrix_from_json(t));
  gt.true_probabilities = j.at("true_probabilities").get<std::vector<double>>();
  return gt;
}

}  // namespace dynemb
