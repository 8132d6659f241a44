#pragma once

#include "dynemb/errors.hpp"
#include "dynemb/types.hpp"

#include <Eigen/Core>

#include <cmath>

namespace dynemb {

// Numerically stable logistic function, no clamping. Both branches share
// exp(-|x|) so logistic(x) + logistic(-x) == 1 to machine precision.
template <typename S>
S logistic(S x) {
  if (x >= S(0)) {
    const S e = std::exp(-x);
    return S(1) / (S(1) + e);
  }
  const S e = std::exp(x);
  return e / (S(1) + e);
}

// Logistic link clamped into [1e-7, 1 - 1e-7].
inline Probability sigmoid(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("sigmoid: non-finite input");
  return Probability(logistic(x));
}

// -(r log p + (1-r) log(1-p)), r in {0,1}.
inline double log_loss(int r, Probability p) {
  if (r != 0 && r != 1) throw InvalidArgument("log_loss: response must be 0 or 1");
  return r == 1 ? -std::log(p.value()) : -std::log1p(-p.value());
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar dot(const Eigen::MatrixBase<DerivedA>& a,
                              const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  typename DerivedA::Scalar acc{0};
  for (Index i = 0; i < a.size(); ++i) acc += a(i) * b(i);
  return acc;
}

// Proximal operator of t*|x|: shrink toward zero, exact zeros inside [-t, t].
template <typename S>
S soft_threshold(S x, S t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return S(0);
}

}  // namespace dynemb
