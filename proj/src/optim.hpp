// SPDX-License-Identifier: Apache-2.0
#pragma once

// Quasi-Newton minimizer used by the maximum-likelihood fits.

#include <functional>
#include <vector>

namespace garchrnn::detail {

struct BfgsResult {
  std::vector<double> x;
  double value = 0;
  double gradient_norm = 0;  // max-norm at x
  int iterations = 0;
  bool converged = false;
};

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  double fd_step = 1e-5;
};

/// Minimizes f with BFGS, central-difference gradients and a backtracking
/// Armijo line search. f may return +inf to reject a point.
BfgsResult minimize_bfgs(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double> x0, const BfgsOptions& options);

}  // namespace garchrnn::detail
