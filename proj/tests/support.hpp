// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared fixtures: simulators, synthetic price files and random networks.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "garchrnn/data.hpp"
#include "garchrnn/network.hpp"
#include "garchrnn/training.hpp"

namespace testing {

struct SimGarch {
  double mu = 0.0;
  double omega = 0.05;
  double alpha = 0.10;
  double beta = 0.85;
  double gamma_lev = 0.0;
  double nu = 0.0;  // 0 means Gaussian innovations
};

/// Returns from a GARCH recursion started at the unconditional variance,
/// after discarding `burn` draws.
inline std::vector<double> simulate_garch(const SimGarch& p, std::size_t n, std::uint64_t seed,
                                          std::size_t burn = 500) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(p.nu > 0 ? p.nu : 5.0);
  const double t_scale = p.nu > 2 ? std::sqrt((p.nu - 2) / p.nu) : 1.0;
  double s2 = p.omega / (1 - p.alpha - p.beta - 0.5 * p.gamma_lev);
  double eps = 0.0;
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t t = 0; t < n + burn; ++t) {
    if (t > 0) s2 = p.omega + (p.alpha + (eps < 0 ? p.gamma_lev : 0.0)) * eps * eps + p.beta * s2;
    const double z = p.nu > 0 ? student(rng) * t_scale : normal(rng);
    eps = std::sqrt(s2) * z;
    if (t >= burn) out.push_back(p.mu + eps);
  }
  return out;
}

/// Weekday dates from `start`, one per value.
inline std::vector<garchrnn::Date> weekday_dates(garchrnn::Date start, std::size_t n) {
  std::vector<garchrnn::Date> d;
  for (garchrnn::Date cur = start; d.size() < n; cur = cur + 1)
    if (cur.is_weekday()) d.push_back(cur);
  return d;
}

inline garchrnn::ReturnSeries make_returns(const std::vector<double>& values,
                                           garchrnn::Date start = {2010, 1, 4}) {
  garchrnn::ReturnSeries r;
  r.values = values;
  r.dates = weekday_dates(start, values.size());
  return r;
}

/// Writes a weekday close series over [first, last] driven by simulated
/// percent log returns. Returns the number of rows written.
inline std::size_t write_price_csv(const std::filesystem::path& path, garchrnn::Date first,
                                   garchrnn::Date last, std::uint64_t seed,
                                   const SimGarch& p = {}) {
  std::size_t n = 0;
  for (garchrnn::Date d = first; d <= last; d = d + 1) n += d.is_weekday() ? 1 : 0;
  const auto r = simulate_garch(p, n, seed);
  std::ofstream out(path);
  out << "date,close\n";
  out.precision(17);
  double price = 100.0;
  std::size_t i = 0;
  for (garchrnn::Date d = first; d <= last; d = d + 1) {
    if (!d.is_weekday()) continue;
    if (i > 0) price *= std::exp(r[i] / 100.0);
    out << d.to_string() << ',' << price << '\n';
    ++i;
  }
  return n;
}

/// Network with every parameter drawn at random, including the biases,
/// gate parameters and coupling that initialization leaves fixed.
inline garchrnn::Network random_network(garchrnn::ModelKind kind, int input_dim, int hidden,
                                        int layers, std::uint64_t seed) {
  using namespace garchrnn;
  Network net = Network::initialize({kind, input_dim, hidden, layers}, 0.97, 0.05, 1.2, seed);
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (auto& v : parameter_views(net.params, net.shape))
    for (double& x : v.values) x = u(rng);
  return net;
}

inline garchrnn::WindowSample random_sample(int window, int input_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  garchrnn::WindowSample s;
  s.inputs.resize(window, input_dim);
  for (Eigen::Index i = 0; i < s.inputs.size(); ++i) s.inputs.data()[i] = n(rng);
  for (int t = 0; t < window; ++t) s.returns.push_back(1.3 * n(rng));
  s.prev_return = n(rng);
  s.target = 0.5 + std::abs(n(rng));
  return s;
}

/// Standardized windows of [r, r^2, rv] over a simulated GARCH path.
inline garchrnn::WindowedDataset simulated_dataset(std::size_t n_returns, std::uint64_t seed,
                                                   int window = 22, int horizon = 1, int k = 5) {
  using namespace garchrnn;
  const auto r = make_returns(simulate_garch({}, n_returns, seed));
  const auto vol = realized_volatility(r, k);
  const auto frame = default_features(r, vol);
  auto d = build_windows(frame, vol, window, horizon);
  FeatureScaler::fit(frame, frame.rows()).apply(d);
  return d;
}

/// |a - b| within abs_tol, or relative to the larger magnitude within rel_tol.
inline bool close_enough(double a, double b, double rel_tol, double abs_tol) {
  const double d = std::abs(a - b);
  return d <= abs_tol || d <= rel_tol * std::max(std::abs(a), std::abs(b));
}

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_abs = 0;
  std::string first_failure;
};

/// Compares the analytic batch gradient with central differences entry by
/// entry: each pair must agree within rel_tol (relative) or abs_tol.
inline GradientCheck check_gradients(const garchrnn::Network& net, const garchrnn::Batch& batch,
                                     double rel_tol = 1e-4, double abs_tol = 1e-7,
                                     double step = 1e-5) {
  using namespace garchrnn;
  auto analytic = bptt_gradients(net, batch).grads;
  auto numeric = finite_diff_oracle(net, batch, step);
  const auto a = parameter_views(analytic, net.shape);
  const auto n = parameter_views(numeric, net.shape);
  GradientCheck out;
  for (std::size_t v = 0; v < a.size(); ++v) {
    for (std::size_t i = 0; i < a[v].values.size(); ++i) {
      const double x = a[v].values[i], y = n[v].values[i];
      ++out.checked;
      out.worst_abs = std::max(out.worst_abs, std::abs(x - y));
      if (!close_enough(x, y, rel_tol, abs_tol)) {
        if (out.failed++ == 0)
          out.first_failure = a[v].name + "[" + std::to_string(i) + "]: analytic " +
                              std::to_string(x) + " vs numeric " + std::to_string(y);
      }
    }
  }
  return out;
}

/// Batch of `size` random windows, with dropout masks when rate > 0.
struct OwnedBatch {
  std::vector<garchrnn::WindowSample> samples;
  garchrnn::Batch batch;
};

inline OwnedBatch random_batch(const garchrnn::Network& net, int window, int size,
                               std::uint64_t seed, double dropout = 0.0) {
  OwnedBatch b;
  for (int i = 0; i < size; ++i)
    b.samples.push_back(random_sample(window, net.shape.input_dim, seed * 101 + i));
  std::uint64_t rng = seed + 1;
  for (const auto& s : b.samples) {
    b.batch.samples.push_back(&s);
    if (dropout > 0)
      b.batch.masks.push_back(garchrnn::make_dropout_masks(net.shape, window, dropout, rng));
  }
  return b;
}

/// Scratch directory under the system temp dir, emptied on creation.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("garchrnn_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

/// Run config over a synthetic 2012-2016 price file written into `dir`:
/// train through 2014, test 2015, stress 2016.
inline nlohmann::json small_run_config(const std::filesystem::path& dir,
                                       const std::vector<std::string>& models,
                                       const std::vector<int>& seeds = {0}) {
  write_price_csv(dir / "prices.csv", {2012, 1, 2}, {2016, 12, 30}, 31);
  return {{"data", {{"prices", "prices.csv"}}},
          {"models", models},
          {"horizons", {1}},
          {"seeds", seeds},
          {"train",
           {{"hidden_dim", 4}, {"max_epochs", 2}, {"batch_size", 64}, {"dropout", 0.0}}},
          {"splits",
           {{"train_end", "2014-12-31"},
            {"test_start", "2015-01-01"},
            {"test_end", "2015-12-31"},
            {"stress_start", "2016-01-01"},
            {"stress_end", "2016-12-30"}}},
          {"out_dir", "out"}};
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace testing
