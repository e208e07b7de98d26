// SPDX-License-Identifier: Apache-2.0
#pragma once

// Small numeric helpers shared across modules.

#include <cmath>
#include <span>

namespace garchrnn {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Inverse of softplus for y > 0.
inline double softplus_inv(double y) {
  return y > 30 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

double mean(std::span<const double> xs);

/// Sample variance with 1/(n-1) normalization.
double sample_variance(std::span<const double> xs);

/// Population variance with 1/n normalization.
double population_variance(std::span<const double> xs);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);

/// Two-sided p-value of a Student-t statistic.
double student_t_two_sided_p(double t, double dof);

}  // namespace garchrnn
