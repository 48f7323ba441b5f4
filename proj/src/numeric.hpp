#pragma once

#include <cmath>

namespace emdot::detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

/// Per-sample logistic loss for logit z and label y.
inline double logistic_loss(double z, double y) { return softplus(z) - y * z; }

}  // namespace emdot::detail
