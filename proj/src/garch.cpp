// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/garch.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "garchrnn/error.hpp"
#include "garchrnn/stats.hpp"
#include "optim.hpp"

namespace garchrnn {

namespace {

constexpr double kMaxPersistence = 0.999;
constexpr double kMinNu = 2.01;

}  // namespace

void GarchParams::validate() const {
  if (!std::isfinite(mu) || !std::isfinite(omega) || !std::isfinite(alpha) ||
      !std::isfinite(beta) || !std::isfinite(gamma_lev))
    throw DataError("GARCH parameters must be finite");
  if (!(omega > 0)) throw DataError("GARCH omega must be positive");
  if (alpha < 0 || beta < 0 || gamma_lev < 0)
    throw DataError("GARCH alpha, beta and gamma must be non-negative");
  if (!(persistence() < 1.0))
    throw DataError("GARCH persistence alpha + beta + gamma/2 must be below 1");
  if (nu && !(*nu > 2.0)) throw DataError("Student-t degrees of freedom must exceed 2");
}

GarchState FilterResult::state() const {
  GarchState s;
  if (innovations.empty()) return s;
  s.last_eps2 = innovations.back() * innovations.back();
  s.last_sigma2 = sigma2.back();
  s.last_eps_negative = innovations.back() < 0;
  return s;
}

double garch_next_variance(const GarchParams& p, const GarchState& s) {
  const double shock = p.alpha + (s.last_eps_negative ? p.gamma_lev : 0.0);
  return p.omega + shock * s.last_eps2 + p.beta * s.last_sigma2;
}

FilterResult garch_filter(const GarchParams& params, std::span<const double> returns,
                          std::optional<double> init_variance) {
  params.validate();
  if (returns.empty()) throw DataError("garch_filter: empty return series");
  FilterResult out;
  const std::size_t n = returns.size();
  out.innovations.resize(n);
  out.sigma2.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.innovations[t] = returns[t] - params.mu;
  double init = 0;
  if (init_variance) {
    init = *init_variance;
  } else {
    for (double e : out.innovations) init += e * e;
    init /= static_cast<double>(n);
  }
  if (!(init > 0)) throw DataError("garch_filter: initial variance must be positive");

  GarchState state;
  out.sigma2[0] = init;
  for (std::size_t t = 1; t <= n; ++t) {
    const double e = out.innovations[t - 1];
    state.last_eps2 = e * e;
    state.last_sigma2 = out.sigma2[t - 1];
    state.last_eps_negative = e < 0;
    const double next = garch_next_variance(params, state);
    if (t < n)
      out.sigma2[t] = next;
    else
      out.next_sigma2 = next;
  }
  return out;
}

double innovation_logpdf(double eps, double sigma2, std::optional<double> nu) {
  if (!nu) return -0.5 * (std::log(2 * std::numbers::pi) + std::log(sigma2) + eps * eps / sigma2);
  // Student-t rescaled so that sigma2 is the variance.
  const double v = *nu;
  return std::lgamma(0.5 * (v + 1)) - std::lgamma(0.5 * v) -
         0.5 * std::log(std::numbers::pi * (v - 2)) - 0.5 * std::log(sigma2) -
         0.5 * (v + 1) * std::log1p(eps * eps / ((v - 2) * sigma2));
}

double garch_loglik(const GarchParams& params, std::span<const double> returns) {
  const auto f = garch_filter(params, returns);
  double ll = 0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double term = innovation_logpdf(f.innovations[t], f.sigma2[t], params.nu);
    if (!std::isfinite(term))
      throw DataError("garch_loglik: non-finite likelihood term at index " + std::to_string(t));
    ll += term;
  }
  return ll;
}

namespace {

// Unconstrained coordinates: mu, u_omega, u_s, u_a, [u_gamma], [u_nu].
struct Layout {
  bool gjr = false;
  bool student = false;
  std::size_t size() const { return 4 + (gjr ? 1 : 0) + (student ? 1 : 0); }
};

GarchParams decode(const Layout& L, const std::vector<double>& x) {
  GarchParams p;
  p.mu = x[0];
  p.omega = softplus(x[1]);
  const double s = kMaxPersistence * sigmoid(x[2]);
  const double a = sigmoid(x[3]);
  p.alpha = s * a;
  p.beta = s * (1 - a);
  std::size_t i = 4;
  if (L.gjr) p.gamma_lev = softplus(x[i++]);
  if (L.student) p.nu = kMinNu + softplus(x[i++]);
  return p;
}

std::vector<double> encode(const Layout& L, const GarchParams& p) {
  const double s = p.alpha + p.beta;
  std::vector<double> x = {p.mu, softplus_inv(p.omega), logit(s / kMaxPersistence),
                           logit(p.alpha / s)};
  if (L.gjr) x.push_back(softplus_inv(std::max(p.gamma_lev, 1e-6)));
  if (L.student) x.push_back(softplus_inv(*p.nu - kMinNu));
  return x;
}

}  // namespace

GarchFit fit_garch_mle(std::span<const double> returns, GarchSpec spec,
                       const FitOptions& options) {
  const std::size_t n = returns.size();
  if (n < 10) throw DataError("fit_garch_mle: series too short");
  const double m = mean(returns);
  const double var = population_variance(returns);
  if (!(var > 0)) throw DataError("fit_garch_mle: degenerate (constant) series");

  const Layout layout{spec.model == GarchModel::gjr, spec.dist == Innovation::student_t};
  GarchParams init;
  init.mu = m;
  init.alpha = 0.05;
  init.beta = 0.90;
  init.gamma_lev = layout.gjr ? 0.02 : 0.0;
  init.omega = var * (1 - init.persistence());
  if (layout.student) init.nu = 8.0;

  const double scale = 1.0 / static_cast<double>(n);
  auto objective = [&](const std::vector<double>& x) {
    const GarchParams p = decode(layout, x);
    if (!(p.persistence() < 1.0)) return std::numeric_limits<double>::infinity();
    try {
      const double ll = garch_loglik(p, returns);
      return std::isfinite(ll) ? -ll * scale : std::numeric_limits<double>::infinity();
    } catch (const DataError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  detail::BfgsOptions opt;
  opt.max_iterations = options.max_iterations;
  opt.gradient_tolerance = options.gradient_tolerance;
  const auto res = detail::minimize_bfgs(objective, encode(layout, init), opt);

  GarchFit fit;
  fit.spec = spec;
  fit.params = decode(layout, res.x);
  fit.report.iterations = res.iterations;
  fit.report.loglik = -res.value / scale;
  fit.report.gradient_norm = res.gradient_norm;
  fit.report.converged = res.converged;
  return fit;
}

double forecast_garch_variance(const GarchParams& params, const GarchState& state,
                               int horizon) {
  params.validate();
  if (horizon < 1) throw DataError("forecast_garch: horizon must be positive");
  if (!(state.last_sigma2 > 0) || state.last_eps2 < 0)
    throw DataError("forecast_garch: invalid state");
  const double next = garch_next_variance(params, state);
  if (horizon == 1) return next;
  const double p = params.persistence();
  const double uncond = params.unconditional_variance();
  return uncond + std::pow(p, horizon - 1) * (next - uncond);
}

std::string to_string(GarchModel m) { return m == GarchModel::plain ? "garch" : "gjr"; }
std::string to_string(Innovation d) { return d == Innovation::normal ? "normal" : "student_t"; }

GarchModel parse_garch_model(const std::string& s) {
  if (s == "garch") return GarchModel::plain;
  if (s == "gjr") return GarchModel::gjr;
  throw ConfigError("unknown GARCH model '" + s + "' (expected garch or gjr)");
}

Innovation parse_innovation(const std::string& s) {
  if (s == "normal") return Innovation::normal;
  if (s == "student_t") return Innovation::student_t;
  throw ConfigError("unknown innovation distribution '" + s +
                    "' (expected normal or student_t)");
}

nlohmann::json to_json(const GarchFit& fit) {
  const auto& p = fit.params;
  return {{"model", to_string(fit.spec.model)},
          {"distribution", to_string(fit.spec.dist)},
          {"mu", p.mu},
          {"omega", p.omega},
          {"alpha", p.alpha},
          {"beta", p.beta},
          {"gamma_lev", p.gamma_lev},
          {"nu", p.nu ? nlohmann::json(*p.nu) : nlohmann::json(nullptr)},
          {"persistence", p.persistence()},
          {"loglik", fit.report.loglik},
          {"converged", fit.report.converged},
          {"iterations", fit.report.iterations},
          {"gradient_norm", fit.report.gradient_norm}};
}

GarchFit garch_fit_from_json(const nlohmann::json& j) {
  GarchFit fit;
  fit.spec.model = parse_garch_model(j.at("model").get<std::string>());
  fit.spec.dist = parse_innovation(j.at("distribution").get<std::string>());
  auto& p = fit.params;
  p.mu = j.at("mu").get<double>();
  p.omega = j.at("omega").get<double>();
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.gamma_lev = j.value("gamma_lev", 0.0);
  if (j.contains("nu") && !j.at("nu").is_null()) p.nu = j.at("nu").get<double>();
  fit.report.loglik = j.value("loglik", 0.0);
  fit.report.converged = j.value("converged", false);
  fit.report.iterations = j.value("iterations", 0);
  fit.report.gradient_norm = j.value("gradient_norm", 0.0);
  p.validate();
  return fit;
}

}  // namespace garchrnn
