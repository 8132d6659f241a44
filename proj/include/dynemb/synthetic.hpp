#pragma once

#include "dynemb/dataset.hpp"
#include "dynemb/rng.hpp"
#include "dynemb/types.hpp"

#include <string>
#include <vector>

namespace dynemb {

struct SyntheticConfig {
  int num_students = 0;
  int num_questions = 0;
  int dim = 0;
  int seq_len = 0;
  double drift_rate = 0.0;  // random-walk step scale on the ability vector
  double learn_gain = 0.0;  // push along the question direction after a miss
  // Tag-structured mode: when num_skills > 0, dim must equal num_skills and
  // each question's true embedding is its skill axis plus within-skill noise.
  int num_skills = 0;
  double skill_axis_scale = 1.0;
  double within_skill_noise = 0.0;
};

// Generating-process record kept alongside a synthetic dataset so tests can
// score models against the true probabilities.
struct GroundTruth {
  Matrix true_question_embeddings;              // M x d
  Vector true_question_biases;                  // M
  std::vector<Matrix> ability_trajectories;     // per student: seq_len x d,
                                                // row t = ability before step t
  std::vector<double> true_probabilities;       // per interaction, dataset order
  SyntheticConfig config;
};

// Draws true question embeddings/biases i.i.d. normal(0, 1/sqrt(d)); each
// student's ability starts normal(0, 1/sqrt(d)) and after every interaction
// takes a drift_rate-scaled random-walk step plus, after an incorrect
// response, learn_gain times the unit question direction. Responses are
// Bernoulli(sigmoid(<w_q, z_s(t)> + b_q)); questions assigned uniformly.
std::pair<Dataset, GroundTruth> generate_synthetic(const SyntheticConfig& cfg, SeededRng& rng);

void save_ground_truth(const GroundTruth& gt, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

}  // namespace dynemb
