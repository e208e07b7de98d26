// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fixed-schema CSV tables written and read by the command layer.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "garchrnn/data.hpp"
#include "garchrnn/eval.hpp"
#include "garchrnn/forecast.hpp"
#include "garchrnn/risk.hpp"

namespace garchrnn {

/// Shortest text that reads back to the same double; "NA" for missing.
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

void write_forecast_csv(const std::filesystem::path& path,
                        const std::vector<ForecastRecord>& records);
std::vector<ForecastRecord> read_forecast_csv(const std::filesystem::path& path);

/// date, return, realized_vol (NA before the first full window).
void write_returns_csv(const std::filesystem::path& path, const ReturnSeries& returns,
                       const VolSeries& vol);

/// date, one column per feature.
void write_features_csv(const std::filesystem::path& path, const FeatureFrame& frame);

/// anchor_date, target_date, anchor-step feature columns, target.
void write_dataset_csv(const std::filesystem::path& path, const WindowedDataset& dataset,
                       const std::vector<std::string>& feature_names);

/// model_id, seed, horizon, subset, n, mse, mae, smape, oos_r2
void write_per_seed_metrics_csv(const std::filesystem::path& path,
                                const std::vector<MetricsReport>& reports);

/// model_id, horizon, subset, metric, mean, std, n_seeds
void write_aggregate_metrics_csv(const std::filesystem::path& path,
                                 const std::vector<SeedAggregate>& aggregates);

/// date, return, var, violation, pinball
void write_var_csv(const std::filesystem::path& path, const BacktestReport& report);

/// Writes `text` atomically enough for our purposes: whole file replaced.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace garchrnn
