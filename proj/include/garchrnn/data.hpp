// SPDX-License-Identifier: Apache-2.0
#pragma once

// Price ingestion, return and realized-volatility construction, rolling
// windows, chronological splits and return-series diagnostics.

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "garchrnn/date.hpp"

namespace garchrnn {

struct PriceSeries {
  std::vector<Date> dates;
  std::vector<double> closes;
};

struct ReturnSeries {
  std::vector<Date> dates;
  std::vector<double> values;
  bool percent = true;  // values scaled by 100

  std::size_t size() const { return values.size(); }
};

/// values[j] is the realized volatility of the k returns ending at dates[j].
struct VolSeries {
  std::vector<Date> dates;
  std::vector<double> values;
  int k = 0;
};

/// Date-aligned per-step feature matrix. `raw_returns` carries the unscaled
/// return of each row so that models can rebuild innovations after the
/// features themselves have been standardized.
struct FeatureFrame {
  std::vector<Date> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // rows = steps, cols = features
  std::vector<double> raw_returns;
  double prev_return = 0.0;  // return preceding row 0

  std::size_t rows() const { return dates.size(); }
};

struct WindowSample {
  Date anchor;       // date of the last input step
  Date target_date;  // date of the realized volatility being predicted
  Eigen::MatrixXd inputs;            // w x F
  std::vector<double> returns;       // raw returns of the w input steps
  double prev_return = 0.0;          // raw return before the first input step
  double target = 0.0;
};

struct WindowedDataset {
  std::vector<WindowSample> samples;
  int window = 0;
  int horizon = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct DiagnosticsReport {
  std::size_t count = 0;
  double mean = 0, std = 0, skewness = 0, kurtosis = 0;
  double lm_stat = 0, lm_pvalue = 1;
  int lm_lags = 0;
  double t_stat = 0, t_pvalue = 1;
};

struct TestResult {
  double statistic = 0;
  double p_value = 1;
};

PriceSeries load_price_csv(const std::filesystem::path& path,
                           const std::string& date_column,
                           const std::string& price_column);

ReturnSeries log_returns(const PriceSeries& prices, bool percent = true);

VolSeries realized_volatility(const ReturnSeries& returns, int k);

/// Default features per step: r, r^2 and the k-day realized volatility,
/// starting at the first step where the realized volatility is defined.
FeatureFrame default_features(const ReturnSeries& returns, const VolSeries& vol);

WindowedDataset build_windows(const FeatureFrame& features, const VolSeries& targets,
                              int window, int horizon);

/// Returns (train, validation); validation holds the final ceil(N * fraction)
/// samples.
std::pair<WindowedDataset, WindowedDataset> chronological_split(
    const WindowedDataset& dataset, double val_fraction);

/// Per-feature standardization fitted on a prefix of a FeatureFrame.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const FeatureFrame& frame, std::size_t rows);
  void apply(WindowedDataset& dataset) const;
};

TestResult arch_lm_test(const ReturnSeries& returns, int lags);
TestResult mean_t_test(const ReturnSeries& returns);
DiagnosticsReport diagnose(const ReturnSeries& returns, int lm_lags);

}  // namespace garchrnn
