// SPDX-License-Identifier: Apache-2.0
#pragma once

// Value-at-Risk from volatility forecasts with Student-t residuals,
// violation counting and pinball-loss scoring.

#include <span>
#include <vector>

#include "garchrnn/date.hpp"

namespace garchrnn {

std::vector<double> standardized_residuals(std::span<const double> returns, double mu,
                                           std::span<const double> sigma);

struct StudentTFit {
  double nu = 0;
  double scale = 1;
  double loglik = 0;
};

inline constexpr double kMinStudentNu = 2.1;
inline constexpr double kMaxStudentNu = 200.0;

/// Maximum-likelihood degrees of freedom of a unit-variance Student-t with a
/// free scale, nu clamped to [2.1, 200].
StudentTFit fit_student_t(std::span<const double> residuals);

/// alpha-quantile of the unit-variance Student-t with nu > 2 degrees of freedom.
double t_quantile(double alpha, double nu);

/// Loss-scale VaR: -mu - q_alpha * sigma_hat.
double var_forecast(double mu, double sigma_hat, double q_alpha);

/// Quantile loss of a realized return against a loss-scale VaR.
double pinball_loss(double realized, double var, double alpha);

struct VaRSeries {
  std::vector<Date> dates;
  std::vector<double> var_values;
  double alpha = 0.01;
  double nu = 0;
  double mu = 0;
};

VaRSeries build_var_series(std::span<const Date> dates, std::span<const double> sigma_hat,
                           double mu, double nu, double alpha);

struct BacktestRow {
  Date date;
  double realized = 0;
  double var = 0;
  bool violation = false;
  double pinball = 0;
};

struct BacktestReport {
  std::size_t n_forecasts = 0;
  std::size_t n_violations = 0;
  double violation_ratio = 0;
  double mean_pinball_loss = 0;
  double alpha = 0;
  std::vector<BacktestRow> rows;
};

/// `returns[i]` is the realized return VaR `var_series.var_values[i]` covers.
BacktestReport backtest(std::span<const double> returns, const VaRSeries& var_series,
                        double alpha);

}  // namespace garchrnn
