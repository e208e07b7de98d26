// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-step cell kernels that record what backpropagation needs.

#include "garchrnn/cells.hpp"
#include "garchrnn/network.hpp"
#include "garchrnn/stats.hpp"

namespace garchrnn::detail {

inline Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& a) {
  return a.unaryExpr([](double v) { return garchrnn::sigmoid(v); });
}

/// Advances the variance recursion and fills sigma2, g and tanh(g).
void gate_step(const GarchGateParams& gate, double eps2_prev, double sigma2_prev,
               StepCache& cache);

/// GRU step. When `coupled`, uses the h-hat convention and applies
/// h = tanh(h_hat + coupling * cache.g) (cache.g must already be set).
void gru_step(const GruParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
              bool coupled, double coupling, StepCache& cache);

/// LSTM step. When `coupled`, applies h = (1 + coupling * tanh(g)) * h_tilde.
void lstm_step(const LstmParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
               const Eigen::VectorXd& c_prev, bool coupled, double coupling,
               StepCache& cache);

constexpr double kHeadFloor = 1e-12;

// Keeps the gate strictly inside its region once the sigmoids or softplus
// saturate in double precision: omega >= kOmegaFloor and
// alpha + beta <= lambda_max * (1 - kPersistenceMargin).
constexpr double kOmegaFloor = 1e-12;
constexpr double kPersistenceMargin = 1e-11;

}  // namespace garchrnn::detail
