// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/forecast.hpp"

#include <cmath>

#include "garchrnn/error.hpp"

namespace garchrnn {

ClassicalForecaster::ClassicalForecaster(GarchParams params, int horizon)
    : params_(std::move(params)), horizon_(horizon) {
  params_.validate();
  if (horizon_ < 1) throw ConfigError("ClassicalForecaster: horizon must be positive");
}

double ClassicalForecaster::predict(const WindowSample& sample) const {
  const auto f = garch_filter(params_, sample.returns, params_.unconditional_variance());
  return std::sqrt(forecast_garch_variance(params_, f.state(), horizon_));
}

std::vector<ForecastRecord> rolling_forecast(const Predictor& predictor,
                                             const WindowedDataset& dataset, int horizon,
                                             const std::string& model_id, std::uint64_t seed) {
  if (dataset.horizon != horizon)
    throw ConfigError("rolling_forecast: dataset built for horizon " +
                      std::to_string(dataset.horizon) + ", requested " + std::to_string(horizon));
  std::vector<ForecastRecord> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    if (!out.empty() && !(out.back().anchor_date < s.anchor))
      throw DataError("rolling_forecast: dataset anchors are not strictly increasing");
    const double pred = predictor.predict(s);
    if (!(pred > 0) || !std::isfinite(pred))
      throw DivergenceError(model_id + ": non-positive forecast at " + s.anchor.to_string());
    out.push_back({model_id, seed, horizon, s.anchor, pred, s.target});
  }
  return out;
}

PipelineFeatures pipeline_features(const GarchParams& fitted, const ReturnSeries& returns) {
  const auto f = garch_filter(fitted, returns.values);
  PipelineFeatures out;
  out.dates = returns.dates;
  out.alpha_eps.reserve(returns.size());
  out.beta_sigma.reserve(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) {
    out.alpha_eps.push_back(fitted.alpha * f.innovations[t]);
    out.beta_sigma.push_back(fitted.beta * std::sqrt(f.sigma2[t]));
  }
  return out;
}

FeatureFrame pipeline_frame(const PipelineFeatures& features, const ReturnSeries& returns,
                            const VolSeries& vol) {
  const std::size_t offset = static_cast<std::size_t>(vol.k) - 1;
  if (features.dates.size() != returns.size() || returns.size() != vol.values.size() + offset)
    throw DataError("pipeline_frame: features, returns and volatility misaligned");
  FeatureFrame f;
  f.names = {"alpha_eps", "beta_sigma"};
  const std::size_t rows = vol.values.size();
  f.values.resize(static_cast<Eigen::Index>(rows), 2);
  for (std::size_t j = 0; j < rows; ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    f.dates.push_back(vol.dates[j]);
    f.raw_returns.push_back(returns.values[j + offset]);
    f.values(row, 0) = features.alpha_eps[j + offset];
    f.values(row, 1) = features.beta_sigma[j + offset];
  }
  f.prev_return = offset > 0 ? returns.values[offset - 1] : 0.0;
  return f;
}

}  // namespace garchrnn
