#pragma once

#include <Eigen/Core>

#include "dynemb/errors.hpp"

#include <cmath>
#include <cstdint>

namespace dynemb {

template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Scalar = double;
using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;
using Index = Eigen::Index;

// Reserved dense index for raw IDs never seen during training (cold start).
inline constexpr int kUnknownId = -1;

// Sentinel for absent optional fields on an interaction.
inline constexpr int kNoSkill = -1;
inline constexpr std::int64_t kNoTimestamp = -1;

// Predicted probability of a correct response, clamped away from {0,1}
// so log loss stays finite.
class Probability {
 public:
  static constexpr double kClampEps = 1e-7;

  explicit Probability(double v) {
    if (!std::isfinite(v)) throw InvalidArgument("Probability: non-finite value");
    if (v < kClampEps) v = kClampEps;
    if (v > 1.0 - kClampEps) v = 1.0 - kClampEps;
    value_ = v;
  }

  double value() const { return value_; }

 private:
  double value_;
};

}  // namespace dynemb
