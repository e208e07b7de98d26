// SPDX-License-Identifier: Apache-2.0
#pragma once

// Forecast accuracy metrics and multi-seed aggregation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "garchrnn/forecast.hpp"
#include "garchrnn/training.hpp"

namespace garchrnn {

struct MetricsReport {
  std::string model_id;
  std::uint64_t seed = 0;
  int horizon = 0;
  std::string subset = "full";
  std::size_t n = 0;
  double mse = 0;
  double mae = 0;
  double smape = 0;
  std::optional<double> oos_r2;  // missing when realized values are constant
  std::string oos_r2_note;
};

/// mse, mae, smape in [0, 2] and R^2 against the test-set mean.
MetricsReport compute_metrics(std::span<const ForecastRecord> records);

/// Records whose realized sigma is at or above the empirical q-quantile
/// (linear interpolation between order statistics).
std::vector<ForecastRecord> high_vol_subset(std::span<const ForecastRecord> records, double q);

struct MetricSummary {
  double mean = 0;
  std::optional<double> std;  // sample std; missing below two seeds
};

struct SeedAggregate {
  std::string model_id;
  int horizon = 0;
  std::string subset;
  std::size_t n_seeds = 0;
  MetricSummary mse, mae, smape, oos_r2;
};

SeedAggregate aggregate_seeds(std::span<const MetricsReport> reports);

/// Mean epoch time of b divided by that of a.
double compare_epoch_times(const TrainReport& a, const TrainReport& b);
double compare_epoch_times(std::span<const double> a_seconds, std::span<const double> b_seconds);

}  // namespace garchrnn
