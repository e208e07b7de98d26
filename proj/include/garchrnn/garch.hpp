// SPDX-License-Identifier: Apache-2.0
#pragma once

// GARCH(1,1) and GJR-GARCH(1,1,1) with constant mean: filtering, likelihood,
// maximum-likelihood estimation and multi-step variance forecasts.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace garchrnn {

enum class GarchModel { plain, gjr };
enum class Innovation { normal, student_t };

struct GarchSpec {
  GarchModel model = GarchModel::plain;
  Innovation dist = Innovation::normal;
};

struct GarchParams {
  double mu = 0;
  double omega = 0.1;
  double alpha = 0.05;
  double beta = 0.9;
  double gamma_lev = 0;         // 0 for plain GARCH
  std::optional<double> nu;     // set for Student-t innovations

  /// alpha + beta + gamma_lev / 2
  double persistence() const { return alpha + beta + 0.5 * gamma_lev; }
  double unconditional_variance() const { return omega / (1.0 - persistence()); }

  /// Throws DataError when the invariants (positivity, stationarity, nu > 2)
  /// do not hold.
  void validate() const;
};

struct GarchState {
  double last_eps2 = 0;
  double last_sigma2 = 1;
  bool last_eps_negative = false;
};

struct FilterResult {
  std::vector<double> innovations;  // eps_t = r_t - mu
  std::vector<double> sigma2;       // conditional variance of each r_t
  double next_sigma2 = 0;           // one-step-ahead variance after the last return

  GarchState state() const;
};

/// Conditional variance recursion. `init_variance` seeds sigma2[0]; when
/// absent, the sample variance of the demeaned returns is used.
FilterResult garch_filter(const GarchParams& params, std::span<const double> returns,
                          std::optional<double> init_variance = std::nullopt);

/// One step of the variance recursion.
double garch_next_variance(const GarchParams& params, const GarchState& state);

double garch_loglik(const GarchParams& params, std::span<const double> returns);

/// Log density of a zero-mean innovation with variance sigma2.
double innovation_logpdf(double eps, double sigma2, std::optional<double> nu);

struct FitReport {
  int iterations = 0;
  double loglik = 0;
  double gradient_norm = 0;  // max-norm, per observation, transformed scale
  bool converged = false;
};

struct GarchFit {
  GarchSpec spec;
  GarchParams params;
  FitReport report;
};

struct FitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
};

GarchFit fit_garch_mle(std::span<const double> returns, GarchSpec spec,
                       const FitOptions& options = {});

/// Expected conditional variance h steps after the state.
double forecast_garch_variance(const GarchParams& params, const GarchState& state,
                               int horizon);

std::string to_string(GarchModel m);
std::string to_string(Innovation d);
GarchModel parse_garch_model(const std::string& s);
Innovation parse_innovation(const std::string& s);

nlohmann::json to_json(const GarchFit& fit);
GarchFit garch_fit_from_json(const nlohmann::json& j);

}  // namespace garchrnn
