// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "garchrnn/error.hpp"
#include "garchrnn/stats.hpp"

namespace garchrnn {

MetricsReport compute_metrics(std::span<const ForecastRecord> records) {
  if (records.empty()) throw DataError("compute_metrics: no forecast records");
  MetricsReport m;
  m.model_id = records.front().model_id;
  m.seed = records.front().seed;
  m.horizon = records.front().horizon;
  m.n = records.size();
  double y_mean = 0;
  for (const auto& r : records) y_mean += r.realized_sigma;
  y_mean /= static_cast<double>(m.n);

  double sse = 0, sae = 0, ssmape = 0, sst = 0;
  for (const auto& r : records) {
    const double e = r.predicted_sigma - r.realized_sigma;
    sse += e * e;
    sae += std::abs(e);
    const double denom = (std::abs(r.realized_sigma) + std::abs(r.predicted_sigma)) / 2;
    if (denom > 0) ssmape += std::abs(e) / denom;
    sst += (r.realized_sigma - y_mean) * (r.realized_sigma - y_mean);
  }
  const auto n = static_cast<double>(m.n);
  m.mse = sse / n;
  m.mae = sae / n;
  m.smape = ssmape / n;
  if (sst > 0)
    m.oos_r2 = 1.0 - sse / sst;
  else
    m.oos_r2_note = "constant realized volatility";
  return m;
}

std::vector<ForecastRecord> high_vol_subset(std::span<const ForecastRecord> records, double q) {
  if (!(q >= 0 && q < 1)) throw ConfigError("high_vol_subset: q must lie in [0, 1)");
  if (records.empty()) throw DataError("high_vol_subset: no records");
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.realized_sigma);
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double threshold = v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);

  std::vector<ForecastRecord> out;
  for (const auto& r : records)
    if (r.realized_sigma >= threshold) out.push_back(r);
  if (out.empty()) throw DataError("high_vol_subset: empty subset");
  return out;
}

namespace {

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  if (xs.empty()) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = mean(xs);
  if (xs.size() >= 2) s.std = std::sqrt(sample_variance(xs));
  return s;
}

}  // namespace

SeedAggregate aggregate_seeds(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw DataError("aggregate_seeds: no reports");
  SeedAggregate a;
  a.model_id = reports.front().model_id;
  a.horizon = reports.front().horizon;
  a.subset = reports.front().subset;
  a.n_seeds = reports.size();
  std::vector<double> mse, mae, smape, r2;
  for (const auto& r : reports) {
    if (r.model_id != a.model_id || r.horizon != a.horizon || r.subset != a.subset)
      throw std::invalid_argument("aggregate_seeds: reports span several groups");
    mse.push_back(r.mse);
    mae.push_back(r.mae);
    smape.push_back(r.smape);
    if (r.oos_r2) r2.push_back(*r.oos_r2);
  }
  a.mse = summarize(mse);
  a.mae = summarize(mae);
  a.smape = summarize(smape);
  a.oos_r2 = summarize(r2);
  return a;
}

double compare_epoch_times(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("compare_epoch_times: empty timing arrays");
  double sa = 0, sb = 0;
  for (double x : a) sa += x;
  for (double x : b) sb += x;
  return (sb / static_cast<double>(b.size())) / (sa / static_cast<double>(a.size()));
}

double compare_epoch_times(const TrainReport& a, const TrainReport& b) {
  return compare_epoch_times(a.epoch_seconds, b.epoch_seconds);
}

}  // namespace garchrnn
