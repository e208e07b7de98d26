// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/risk.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>

#include "garchrnn/error.hpp"
#include "garchrnn/garch.hpp"
#include "garchrnn/stats.hpp"

namespace garchrnn {

std::vector<double> standardized_residuals(std::span<const double> returns, double mu,
                                           std::span<const double> sigma) {
  if (returns.size() != sigma.size())
    throw DataError("standardized_residuals: returns and sigma lengths differ");
  std::vector<double> out(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) {
    if (!(sigma[i] > 0))
      throw DataError("standardized_residuals: non-positive sigma at index " + std::to_string(i));
    out[i] = (returns[i] - mu) / sigma[i];
  }
  return out;
}

namespace {

double t_loglik(std::span<const double> x, double nu, double scale) {
  const double s2 = scale * scale;
  double ll = 0;
  for (double v : x) ll += innovation_logpdf(v, s2, nu);
  return ll;
}

// Scale maximizing the likelihood for fixed nu.
std::pair<double, double> profile_scale(std::span<const double> x, double nu, double sd) {
  const auto r = boost::math::tools::brent_find_minima(
      [&](double log_s) { return -t_loglik(x, nu, std::exp(log_s)); }, std::log(sd) - 3.0,
      std::log(sd) + 3.0, 40);
  return {std::exp(r.first), -r.second};
}

}  // namespace

StudentTFit fit_student_t(std::span<const double> residuals) {
  if (residuals.size() < 30) throw DataError("fit_student_t: need at least 30 residuals");
  const double var = population_variance(residuals);
  if (!(var > 0) || !std::isfinite(var)) throw DataError("fit_student_t: degenerate residuals");
  const double sd = std::sqrt(var);
  const auto r = boost::math::tools::brent_find_minima(
      [&](double log_nu) { return -profile_scale(residuals, std::exp(log_nu), sd).second; },
      std::log(kMinStudentNu), std::log(kMaxStudentNu), 30);
  StudentTFit fit;
  fit.nu = std::clamp(std::exp(r.first), kMinStudentNu, kMaxStudentNu);
  const auto [scale, ll] = profile_scale(residuals, fit.nu, sd);
  fit.scale = scale;
  fit.loglik = ll;
  return fit;
}

double t_quantile(double alpha, double nu) {
  if (!(alpha > 0 && alpha < 1)) throw DataError("t_quantile: alpha must lie in (0, 1)");
  if (!(nu > 2)) throw DataError("t_quantile: degrees of freedom must exceed 2");
  if (alpha == 0.5) return 0.0;
  const boost::math::students_t dist(nu);
  return boost::math::quantile(dist, alpha) * std::sqrt((nu - 2) / nu);
}

double var_forecast(double mu, double sigma_hat, double q_alpha) {
  return -mu - q_alpha * sigma_hat;
}

double pinball_loss(double realized, double var, double alpha) {
  return realized >= -var ? alpha * (realized + var) : (1 - alpha) * (-realized - var);
}

VaRSeries build_var_series(std::span<const Date> dates, std::span<const double> sigma_hat,
                           double mu, double nu, double alpha) {
  if (dates.size() != sigma_hat.size()) throw DataError("build_var_series: length mismatch");
  VaRSeries s;
  s.alpha = alpha;
  s.nu = nu;
  s.mu = mu;
  const double q = t_quantile(alpha, nu);
  s.dates.assign(dates.begin(), dates.end());
  for (double sig : sigma_hat) {
    if (!(sig >= 0)) throw DataError("build_var_series: negative volatility forecast");
    s.var_values.push_back(var_forecast(mu, sig, q));
  }
  return s;
}

BacktestReport backtest(std::span<const double> returns, const VaRSeries& var_series,
                        double alpha) {
  if (returns.size() != var_series.var_values.size() ||
      var_series.dates.size() != var_series.var_values.size())
    throw DataError("backtest: returns and VaR series are not aligned");
  if (alpha != var_series.alpha) throw DataError("backtest: alpha does not match the VaR series");
  if (returns.empty()) throw DataError("backtest: no forecasts");
  BacktestReport rep;
  rep.alpha = alpha;
  rep.n_forecasts = returns.size();
  double pin = 0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    const double var = var_series.var_values[i];
    if (!std::isfinite(var)) throw DataError("backtest: non-finite VaR at index " + std::to_string(i));
    BacktestRow row{var_series.dates[i], returns[i], var, returns[i] < -var,
                    pinball_loss(returns[i], var, alpha)};
    rep.n_violations += row.violation ? 1 : 0;
    pin += row.pinball;
    rep.rows.push_back(row);
  }
  rep.violation_ratio = static_cast<double>(rep.n_violations) / static_cast<double>(rep.n_forecasts);
  rep.mean_pinball_loss = pin / static_cast<double>(rep.n_forecasts);
  return rep;
}

}  // namespace garchrnn
