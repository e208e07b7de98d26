// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace garchrnn {

// Accumulated relative to the first value so constant input gives that value exactly.
double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0;
  for (double x : xs) s += x - xs.front();
  return xs.front() + s / static_cast<double>(xs.size());
}

namespace {
double sum_sq_dev(std::span<const double> xs) {
  const double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s;
}
}  // namespace

double sample_variance(std::span<const double> xs) {
  return sum_sq_dev(xs) / static_cast<double>(xs.size() - 1);
}

double population_variance(std::span<const double> xs) {
  return sum_sq_dev(xs) / static_cast<double>(xs.size());
}

double chi_square_sf(double x, double dof) {
  if (x <= 0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

double student_t_two_sided_p(double t, double dof) {
  const boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace garchrnn
