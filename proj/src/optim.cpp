// SPDX-License-Identifier: Apache-2.0
#include "optim.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace garchrnn::detail {

namespace {

using Fn = std::function<double(const std::vector<double>&)>;

Eigen::VectorXd numeric_gradient(const Fn& f, const Eigen::VectorXd& x, double step) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  std::vector<double> probe(x.data(), x.data() + n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double h = step * std::max(1.0, std::abs(x(i)));
    probe[k] = x(i) + h;
    const double fp = f(probe);
    probe[k] = x(i) - h;
    const double fm = f(probe);
    probe[k] = x(i);
    if (std::isfinite(fp) && std::isfinite(fm)) {
      g(i) = (fp - fm) / (2 * h);
    } else {
      // One-sided difference at the edge of the feasible region.
      const double f0 = f(probe);
      g(i) = std::isfinite(fp) ? (fp - f0) / h : (f0 - fm) / h;
    }
  }
  return g;
}

}  // namespace

BfgsResult minimize_bfgs(const Fn& f, std::vector<double> x0, const BfgsOptions& options) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  auto eval = [&](const Eigen::VectorXd& v) {
    return f(std::vector<double>(v.data(), v.data() + v.size()));
  };

  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(x0.data(), n);
  double fx = eval(x);
  Eigen::VectorXd g = numeric_gradient(f, x, options.fd_step);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh_h = true;

  BfgsResult res;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (g.cwiseAbs().maxCoeff() < options.gradient_tolerance) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d = -H * g;
    if (g.dot(d) >= 0) {
      H.setIdentity();
      fresh_h = true;
      d = -g;
    }
    double t = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    const double slope = g.dot(d);
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + t * d;
      f_new = eval(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!(std::isfinite(f_new) && f_new <= fx + 1e-4 * t * slope)) {
      if (!fresh_h) {
        H.setIdentity();
        fresh_h = true;
        continue;
      }
      break;  // no descent possible along the gradient
    }
    const Eigen::VectorXd g_new = numeric_gradient(f, x_new, options.fd_step);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-14) {
      if (fresh_h) {
        H *= sy / y.squaredNorm();
        fresh_h = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    x = x_new;
    fx = f_new;
    g = g_new;
  }
  res.x.assign(x.data(), x.data() + n);
  res.value = fx;
  res.gradient_norm = g.cwiseAbs().maxCoeff();
  res.iterations = it;
  if (!res.converged && res.gradient_norm < options.gradient_tolerance) res.converged = true;
  return res;
}

}  // namespace garchrnn::detail
