// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration, experiment assembly and the command implementations
// behind the CLI verbs. Every command recomputes its inputs from the price
// CSV, so outputs depend only on the config and the data.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "garchrnn/data.hpp"
#include "garchrnn/garch.hpp"
#include "garchrnn/training.hpp"

namespace garchrnn {

struct SplitDates {
  Date train_end;
  Date test_start;
  Date test_end;
  Date stress_start;
  Date stress_end;
};

struct RunConfig {
  std::filesystem::path prices;
  std::string date_column = "date";
  std::string price_column = "close";
  std::vector<std::string> models;
  std::vector<int> horizons;
  std::vector<std::uint64_t> seeds;
  TrainConfig train;
  SplitDates splits;
  double val_fraction = 0.2;
  double var_alpha = 0.01;
  double high_vol_q = 0.9;
  int k = 5;
  int window = 22;
  double lambda_max = 0.97;
  Innovation garch_distribution = Innovation::normal;
  int lm_lags = 10;
  std::filesystem::path out_dir = "out";
  int parallel = 1;

  void validate() const;
};

/// Model identifiers accepted in `models`.
const std::vector<std::string>& known_models();
bool is_classical_model(const std::string& model);

/// Relative data paths resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

struct RunOverrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallel;
};

void apply_overrides(RunConfig& cfg, const RunOverrides& o);

/// Restricts the (model, horizon, seed) grid of a command.
struct JobFilter {
  std::optional<std::string> model;
  std::optional<int> horizon;
  std::optional<std::uint64_t> seed;
};

/// Loaded price data and everything derived from it independent of horizon.
struct Experiment {
  RunConfig cfg;
  ReturnSeries returns;
  VolSeries vol;
  FeatureFrame features;  // unscaled default features

  /// Returns dated on or before train_end.
  std::vector<double> development_returns() const;
};

Experiment load_experiment(const RunConfig& cfg);

/// Scaled window datasets of one horizon, cut by target date.
struct Segments {
  WindowedDataset train, val, test, stress;
  FeatureScaler scaler;
  double mu = 0;           // mean return up to the last training anchor
  double sigma2_init = 1;  // variance of those returns
};

Segments build_segments(const RunConfig& cfg, const FeatureFrame& frame,
                        const ReturnSeries& returns, const VolSeries& vol, int horizon);

std::string job_tag(const std::string& model, int horizon, std::uint64_t seed);

void cmd_prepare(const RunConfig& cfg);
void cmd_fit_garch(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg, const JobFilter& filter = {});
void cmd_forecast(const RunConfig& cfg, const JobFilter& filter = {});
void cmd_evaluate(const RunConfig& cfg);
void cmd_backtest(const RunConfig& cfg, int horizon = 1);
void cmd_params(const RunConfig& cfg);

}  // namespace garchrnn
