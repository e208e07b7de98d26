// SPDX-License-Identifier: Apache-2.0
// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "garchrnn/cells.hpp"
#include "garchrnn/eval.hpp"
#include "garchrnn/garch.hpp"
#include "garchrnn/network.hpp"
#include "garchrnn/risk.hpp"
#include "garchrnn/training.hpp"
#include "reference_cells.hpp"
#include "support.hpp"

using namespace garchrnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. analytic gradients against central differences
Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  std::size_t configs = 0, failed = 0, entries = 0;
  double worst = 0;
  std::string first;
  for (auto kind : {ModelKind::gru, ModelKind::lstm, ModelKind::garch_gru, ModelKind::garch_lstm}) {
    for (std::uint64_t c = 0; c < 20; ++c) {
      std::mt19937_64 rng(1000 * static_cast<std::uint64_t>(kind) + c);
      const int hidden = 1 + static_cast<int>(rng() % 8);
      const int window = 2 + static_cast<int>(rng() % 9);
      const int layers = 1 + static_cast<int>(rng() % 2);
      const int batch = 1 + static_cast<int>(rng() % 3);
      const double dropout = layers > 1 && c % 2 ? 0.2 : 0.0;
      const auto net = testing::random_network(kind, 3, hidden, layers, rng());
      const auto b = testing::random_batch(net, window, batch, rng(), dropout);
      const auto r = testing::check_gradients(net, b.batch, 1e-4, 1e-7, 1e-5);
      ++configs;
      entries += r.checked;
      worst = std::max(worst, r.worst_abs);
      if (r.failed) {
        ++failed;
        if (first.empty()) first = to_string(kind) + " " + r.first_failure;
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed == 0 && secs < 120;
  o.detail = std::to_string(configs) + " configs, " + std::to_string(entries) + " entries, " +
             std::to_string(failed) + " failing configs, max abs diff " + fmt("%.2e", worst) +
             ", " + fmt("%.1fs", secs) + (first.empty() ? "" : "; first: " + first);
  return o;
}

// 2. coupling-off reduction and reference agreement
Outcome reduction_equivalence() {
  double worst_reduction = 0, worst_ref = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto gated = testing::random_network(ModelKind::garch_lstm, 3, 6, 1 + seed % 3, seed);
    gated.params.gate.coupling = 0.0;
    Network plain = gated;
    plain.shape.kind = ModelKind::lstm;
    for (int s = 0; s < 3; ++s) {
      const auto x = testing::random_sample(15, 3, seed * 10 + s);
      worst_reduction = std::max(worst_reduction, std::abs(predict(gated, x) - predict(plain, x)));
    }
    for (auto kind : {ModelKind::gru, ModelKind::lstm}) {
      const auto net = testing::random_network(kind, 3, 7, 1 + seed % 3, seed + 50);
      const auto x = testing::random_sample(22, 3, seed + 500);
      const double a = predict(net, x), b = testing::reference_predict(net, x);
      worst_ref = std::max(worst_ref, std::abs(a - b) / std::max(1.0, std::abs(b)));
    }
  }
  return {worst_reduction <= 1e-12 && worst_ref <= 1e-6,
          "max |coupled(w=0) - plain| " + fmt("%.1e", worst_reduction) +
              ", max reference diff " + fmt("%.1e", worst_ref) + " over 10 seeds"};
}

// 3. constraint map over random raw parameters
Outcome constraint_safety() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> wide(0, 10);
  std::uniform_real_distribution<double> extreme(-700, 700);
  std::size_t bad = 0;
  double max_sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const bool ext = i % 10 == 0;
    const double a = ext ? extreme(rng) : wide(rng), b = ext ? extreme(rng) : wide(rng),
                 c = ext ? extreme(rng) : wide(rng);
    const auto t = constrain_garch(a, b, c, 0.97);
    max_sum = std::max(max_sum, t.alpha + t.beta);
    if (!(t.omega > 0 && t.alpha >= 0 && t.beta >= 0 && t.alpha + t.beta <= 0.97 - 1e-12)) ++bad;
  }
  return {bad == 0, "100000 draws, " + std::to_string(bad) + " violations, max alpha+beta " +
                        fmt("%.15f", max_sum)};
}

// 4. maximum-likelihood recovery
Outcome mle_recovery() {
  int ok = 0;
  double slowest = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = testing::simulate_garch({0.0, 0.05, 0.10, 0.85}, 20000, seed + 1);
    const auto t0 = Clock::now();
    const auto fit = fit_garch_mle(r, {GarchModel::plain, Innovation::normal});
    slowest = std::max(slowest, seconds_since(t0));
    const auto& p = fit.params;
    if (std::abs(p.omega - 0.05) <= 0.05 && std::abs(p.alpha - 0.10) <= 0.05 &&
        std::abs(p.beta - 0.85) <= 0.05)
      ++ok;
  }
  return {ok >= 18 && slowest < 60,
          std::to_string(ok) + "/20 seeds within 0.05, slowest fit " + fmt("%.2fs", slowest)};
}

// 5. multi-step forecast convergence
Outcome forecast_convergence() {
  GarchParams p;
  p.omega = 0.2;
  p.alpha = 0.2;
  p.beta = 0.3;
  double worst = 0;
  for (double start : {0.01, 1.0, 50.0}) {
    const GarchState s{start, start, false};
    worst = std::max(worst, std::abs(forecast_garch_variance(p, s, 200) - 0.4));
  }
  return {worst <= 1e-9, "max |h=200 forecast - 0.4| " + fmt("%.1e", worst)};
}

// 6. GARCH-GRU learns a simulated series
Outcome learnability() {
  const auto t0 = Clock::now();
  const testing::SimGarch sim{0.0, 0.1, 0.12, 0.85};
  const auto r = testing::make_returns(testing::simulate_garch(sim, 4000, 2024));
  const auto vol = realized_volatility(r, 5);
  const auto frame = default_features(r, vol);
  auto d = build_windows(frame, vol, 22, 1);
  auto [tr, va] = chronological_split(d, 0.2);
  const auto last_anchor = tr.samples.back().anchor;
  std::size_t rows = 0;
  while (rows < frame.rows() && frame.dates[rows] <= last_anchor) ++rows;
  const auto scaler = FeatureScaler::fit(frame, rows);
  scaler.apply(tr);
  scaler.apply(va);
  std::vector<double> prefix;
  for (std::size_t i = 0; i < r.size() && r.dates[i] <= last_anchor; ++i) prefix.push_back(r.values[i]);
  double mu = 0, var = 0;
  for (double x : prefix) mu += x;
  mu /= static_cast<double>(prefix.size());
  for (double x : prefix) var += (x - mu) * (x - mu);
  var /= static_cast<double>(prefix.size());

  TrainConfig cfg;
  cfg.hidden_dim = 8;
  cfg.max_epochs = 100;
  cfg.seed = 7;
  const auto init = Network::initialize({ModelKind::garch_gru, 3, 8, 1}, 0.97, mu, var, cfg.seed);
  const auto a = train_network(init, tr.samples, va.samples, cfg);
  const auto b = train_network(init, tr.samples, va.samples, cfg);
  const double secs = seconds_since(t0);
  const bool same = a.report.val_mse == b.report.val_mse && a.report.train_mse == b.report.train_mse;
  const double ratio = a.report.best_val_mse / a.report.val_mse[0];
  return {ratio <= 0.5 && same && secs < 300,
          "best/epoch-0 val mse " + fmt("%.3f", ratio) + " (" + fmt("%.4f", a.report.best_val_mse) +
              " / " + fmt("%.4f", a.report.val_mse[0]) + "), best epoch " +
              std::to_string(a.report.best_epoch) + ", repeat identical: " + (same ? "yes" : "no") +
              ", " + fmt("%.1fs", secs) + " for two runs"};
}

// 7. metric oracles and exact scale equivariance
Outcome metric_oracles() {
  const auto dates = testing::weekday_dates({2019, 1, 1}, 2);
  const std::vector<ForecastRecord> ex = {{"m", 0, 1, dates[0], 2, 1}, {"m", 0, 1, dates[1], 2, 3}};
  const auto m = compute_metrics(ex);
  const bool example = std::abs(m.mse - 1) < 1e-10 && std::abs(m.mae - 1) < 1e-10 &&
                       std::abs(m.smape - 8.0 / 15.0) < 1e-10 && m.oos_r2 &&
                       std::abs(*m.oos_r2) < 1e-10;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 4);
  bool equivariant = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ForecastRecord> a, b;
    const double c = std::ldexp(1.0, trial % 11 - 5);
    const auto ds = testing::weekday_dates({2019, 1, 1}, 40);
    for (const auto& dt : ds) {
      const double y = u(rng), p = u(rng);
      a.push_back({"m", 0, 1, dt, p, y});
      b.push_back({"m", 0, 1, dt, c * p, c * y});
    }
    const auto ma = compute_metrics(a), mb = compute_metrics(b);
    equivariant = equivariant && mb.mse == c * c * ma.mse && mb.mae == c * ma.mae &&
                  mb.smape == ma.smape && *mb.oos_r2 == *ma.oos_r2;
  }
  return {example && equivariant,
          "example (mse " + fmt("%.10f", m.mse) + ", mae " + fmt("%.10f", m.mae) + ", smape " +
              fmt("%.10f", m.smape) + ", oos_r2 " + fmt("%.1e", m.oos_r2.value_or(NAN)) +
              "), scale equivariance " + (equivariant ? "exact" : "broken")};
}

// 8. VaR arithmetic, calibration and pinball minimization
Outcome var_checks() {
  VaRSeries s;
  s.alpha = 0.01;
  s.dates = testing::weekday_dates({2020, 1, 1}, 230);
  s.var_values.assign(230, 2.0);
  std::vector<double> r(230, 0.0);
  for (int i : {5, 40, 41, 100, 170, 222}) r[static_cast<std::size_t>(i)] = -4.0;
  const auto rep = backtest(r, s, 0.01);
  const bool ratio = rep.n_violations == 6 && rep.violation_ratio == 6.0 / 230.0;

  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0.5, 2.5);
  const std::size_t N = 10000;
  std::vector<double> sig(N), ret(N);
  for (std::size_t i = 0; i < N; ++i) {
    sig[i] = u(rng);
    ret[i] = sig[i] * n(rng);
  }
  const auto cal = backtest(ret, build_var_series(testing::weekday_dates({1980, 1, 1}, N), sig, 0.0,
                                                  1e6, 0.01),
                            0.01);
  const bool calibrated = cal.violation_ratio >= 0.0044 && cal.violation_ratio <= 0.0161;

  std::vector<double> x(20000);
  for (auto& v : x) v = n(rng) * 1.3;
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  // any level between these two order statistics minimizes the empirical loss
  const std::size_t k = static_cast<std::size_t>(0.01 * x.size());
  const double lo = -sorted[k], hi = -sorted[k - 1];
  const double step = 0.001;
  double best_v = 0, best = INFINITY;
  for (double v = 1.0; v <= 6.0; v += step) {
    double l = 0;
    for (double y : x) l += pinball_loss(y, v, 0.01);
    if (l < best) {
      best = l;
      best_v = v;
    }
  }
  const bool pinball = best_v >= lo - step && best_v <= hi + step;
  return {ratio && calibrated && pinball,
          "6/230 ratio " + fmt("%.6f", rep.violation_ratio) + ", calibration ratio " +
              fmt("%.4f", cal.violation_ratio) + ", pinball argmin " + fmt("%.3f", best_v) +
              " vs empirical quantile interval [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "]"};
}

// 9. GARCH-GRU epochs are cheaper than GARCH-LSTM epochs
Outcome timing_ordering() {
  const auto d = testing::simulated_dataset(1600, 5);
  auto [tr, va] = chronological_split(d, 0.2);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.patience = 100;
  cfg.seed = 1;
  cfg.hidden_dim = 32;
  std::vector<double> gru, lstm;
  for (int rep = 0; rep < 2; ++rep) {
    for (auto kind : {ModelKind::garch_gru, ModelKind::garch_lstm}) {
      const auto init = Network::initialize({kind, 3, 32, 1}, 0.97, 0.0, 1.0, 1);
      const auto t = train_network(init, tr.samples, va.samples, cfg);
      auto& dst = kind == ModelKind::garch_gru ? gru : lstm;
      dst.insert(dst.end(), t.report.epoch_seconds.begin(), t.report.epoch_seconds.end());
    }
  }
  const double ratio = compare_epoch_times(gru, lstm);
  double mg = 0, ml = 0;
  for (double v : gru) mg += v / static_cast<double>(gru.size());
  for (double v : lstm) ml += v / static_cast<double>(lstm.size());
  return {mg < ml, "mean epoch GARCH-GRU " + fmt("%.3fs", mg) + ", GARCH-LSTM " + fmt("%.3fs", ml) +
                       ", LSTM/GRU ratio " + fmt("%.2f", ratio) + " (hidden 32, " +
                       std::to_string(tr.size()) + " training windows)"};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(GARCHRNN_CLI_PATH) + " " + args + " >> " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

/// Rows of a CSV after the header, checking every row has the header's
/// column count and no empty cells.
long csv_rows(const fs::path& p, const std::string& header, std::string& problem) {
  std::ifstream in(p);
  if (!in) {
    problem = "missing " + p.string();
    return -1;
  }
  std::string line;
  std::getline(in, line);
  if (line != header) {
    problem = p.string() + ": header '" + line + "'";
    return -1;
  }
  const auto cols = std::count(header.begin(), header.end(), ',');
  long n = 0;
  while (std::getline(in, line)) {
    if (std::count(line.begin(), line.end(), ',') != cols || line.find(",,") != std::string::npos ||
        line.back() == ',') {
      problem = p.string() + ": malformed row '" + line + "'";
      return -1;
    }
    ++n;
  }
  return n;
}

// 10. command-line pipeline end to end
Outcome end_to_end() {
  const auto t0 = Clock::now();
  const auto dir = testing::fresh_dir("acceptance_e2e");
  const auto rows = testing::write_price_csv(dir / "prices.csv", {2010, 1, 4}, {2020, 12, 31}, 77,
                                             {0.03, 0.03, 0.10, 0.87});
  nlohmann::json cfg = {
      {"data", {{"prices", "prices.csv"}}},
      {"models", {"garch", "gjr", "garch_gru", "garch_lstm", "bm_pipeline"}},
      {"horizons", {1}},
      {"seeds", {0, 1}},
      {"train", {{"hidden_dim", 8}, {"max_epochs", 15}}},
      {"splits",
       {{"train_end", "2018-12-31"},
        {"test_start", "2019-01-01"},
        {"test_end", "2019-12-31"},
        {"stress_start", "2020-01-01"},
        {"stress_end", "2020-12-31"}}}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  const auto log = dir / "cli.log";
  const std::string base = "--config " + (dir / "config.json").string() + " --out-dir " +
                           (dir / "out").string() + " ";
  std::string failure;
  for (const char* verb : {"prepare", "fit-garch", "train", "forecast", "evaluate", "backtest",
                           "params"}) {
    const int code = run_cli(base + verb, log);
    if (code != 0 && failure.empty())
      failure = std::string(verb) + " exited " + std::to_string(code) + " (see " + log.string() + ")";
  }
  const auto out = dir / "out";
  std::string problem;
  auto expect_rows = [&](const fs::path& p, const std::string& header, long min_rows) {
    const long n = csv_rows(p, header, problem);
    if (n >= 0 && n < min_rows && problem.empty())
      problem = p.string() + ": " + std::to_string(n) + " rows";
  };
  if (failure.empty()) {
    expect_rows(out / "data/returns.csv", "date,return,realized_vol", 2700);
    expect_rows(out / "data/features.csv", "date,r,r2,rv", 2700);
    for (const char* tag : {"garch_h1_s0", "gjr_h1_s0", "garch_gru_h1_s0", "garch_gru_h1_s1",
                            "garch_lstm_h1_s0", "garch_lstm_h1_s1", "bm_pipeline_h1_s0",
                            "bm_pipeline_h1_s1"}) {
      for (const char* seg : {"test", "stress"})
        expect_rows(out / "forecasts" / seg / (std::string(tag) + ".csv"),
                    "model_id,seed,horizon,anchor_date,predicted_sigma,realized_sigma", 200);
      expect_rows(out / "var/test" / (std::string(tag) + ".csv"), "date,return,var,violation,pinball",
                  200);
    }
    for (const char* seg : {"test", "stress"}) {
      expect_rows(out / "metrics" / (std::string(seg) + "_per_seed.csv"),
                  "model_id,seed,horizon,subset,n,mse,mae,smape,oos_r2", 16);
      expect_rows(out / "metrics" / (std::string(seg) + "_aggregate.csv"),
                  "model_id,horizon,subset,metric,mean,std,n_seeds", 40);
      expect_rows(out / "backtest" / (std::string(seg) + ".csv"),
                  "model_id,seed,alpha,nu,mu,n_forecasts,n_violations,violation_ratio,"
                  "mean_pinball_loss",
                  8);
    }
    expect_rows(out / "params.csv",
                "model_id,horizon,seed,omega,alpha,beta,alpha_plus_beta,coupling,gamma_lev", 8);
    for (const char* f : {"diagnostics.json", "metrics/metrics.json", "backtest/backtest.json",
                          "fits/garch.json", "fits/gjr.json", "checkpoints/garch_gru_h1_s1.json",
                          "reports/garch_lstm_h1_s0.json", "timing/garch_gru_h1_s0.json"})
      if (!fs::exists(out / f) && problem.empty()) problem = "missing " + (out / f).string();
  }
  const double secs = seconds_since(t0);
  const bool pass = failure.empty() && problem.empty() && secs < 1800;
  std::string detail = std::to_string(rows) + "-row CSV, 7 verbs, " + fmt("%.1fs", secs);
  if (!failure.empty()) detail += "; " + failure;
  if (!problem.empty()) detail += "; " + problem;
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"reduction equivalence", reduction_equivalence},
      {"constraint safety", constraint_safety},
      {"MLE recovery", mle_recovery},
      {"forecast convergence", forecast_convergence},
      {"learnability", learnability},
      {"metric oracles", metric_oracles},
      {"VaR arithmetic and calibration", var_checks},
      {"timing ordering", timing_ordering},
      {"end-to-end pipeline", end_to_end},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %d (%s): %s - %s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
