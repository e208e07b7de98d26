// SPDX-License-Identifier: Apache-2.0
#pragma once

// Rolling-window forecasting over a windowed dataset, the classical GARCH
// window predictor and the two-stage pipeline features.

#include <cstdint>
#include <string>
#include <vector>

#include "garchrnn/data.hpp"
#include "garchrnn/garch.hpp"
#include "garchrnn/network.hpp"

namespace garchrnn {

struct ForecastRecord {
  std::string model_id;
  std::uint64_t seed = 0;
  int horizon = 1;
  Date anchor_date;
  double predicted_sigma = 0;
  double realized_sigma = 0;
};

/// Anything that maps one input window to a positive volatility forecast.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double predict(const WindowSample& sample) const = 0;
};

class NetworkPredictor : public Predictor {
 public:
  explicit NetworkPredictor(const Network& net) : net_(net) {}
  double predict(const WindowSample& sample) const override { return garchrnn::predict(net_, sample); }

 private:
  const Network& net_;
};

/// Filters the window's raw returns from the unconditional variance and
/// emits sqrt of the h-step variance forecast.
class ClassicalForecaster : public Predictor {
 public:
  ClassicalForecaster(GarchParams params, int horizon);
  double predict(const WindowSample& sample) const override;

 private:
  GarchParams params_;
  int horizon_;
};

/// One record per sample, in sample order. The predictor only ever sees
/// the sample's input window.
std::vector<ForecastRecord> rolling_forecast(const Predictor& predictor,
                                             const WindowedDataset& dataset, int horizon,
                                             const std::string& model_id,
                                             std::uint64_t seed = 0);

struct PipelineFeatures {
  std::vector<Date> dates;
  std::vector<double> alpha_eps;   // alpha * eps_t
  std::vector<double> beta_sigma;  // beta * sigma_t
};

PipelineFeatures pipeline_features(const GarchParams& fitted, const ReturnSeries& returns);

/// Pipeline features as a frame aligned with a realized-volatility series.
FeatureFrame pipeline_frame(const PipelineFeatures& features, const ReturnSeries& returns,
                            const VolSeries& vol);

}  // namespace garchrnn
