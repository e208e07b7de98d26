// SPDX-License-Identifier: Apache-2.0
#pragma once

// Stacked recurrent network with an optional GARCH gate on the first layer
// and a volatility head on the last hidden state.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "garchrnn/cells.hpp"
#include "garchrnn/data.hpp"

namespace garchrnn {

enum class ModelKind { gru, lstm, garch_gru, garch_lstm };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
inline bool uses_lstm(ModelKind k) { return k == ModelKind::lstm || k == ModelKind::garch_lstm; }
inline bool uses_garch(ModelKind k) { return k == ModelKind::garch_gru || k == ModelKind::garch_lstm; }

struct NetworkShape {
  ModelKind kind = ModelKind::garch_gru;
  int input_dim = 3;
  int hidden_dim = 8;
  int num_layers = 1;
};

/// All trainable arrays. Also used, zero-initialised, as a gradient set.
struct Parameters {
  std::vector<GruParams> gru;    // filled for GRU kinds
  std::vector<LstmParams> lstm;  // filled for LSTM kinds
  GarchGateParams gate;          // meaningful for GARCH kinds only
  Eigen::VectorXd W_out;
  double b_out = 0;

  static Parameters zeros(const NetworkShape& shape);
};

/// Named view of one contiguous parameter array.
struct ParamView {
  std::string name;
  std::span<double> values;
};

std::vector<ParamView> parameter_views(Parameters& p, const NetworkShape& shape);
std::size_t parameter_count(const NetworkShape& shape);

struct Network {
  NetworkShape shape;
  Parameters params;
  double mu = 0;           // constant mean of returns
  double sigma2_init = 1;  // seed of the gate variance recursion
  std::uint64_t seed = 0;

  static Network initialize(const NetworkShape& shape, double lambda_max, double mu,
                            double sigma2_init, std::uint64_t seed);
};

/// Per-step caches of one layer, kept for backpropagation.
struct StepCache {
  Eigen::VectorXd x, h_prev, c_prev;
  Eigen::VectorXd gates;    // post-activation gate blocks stacked like b
  Eigen::VectorXd c, tanh_c;
  Eigen::VectorXd inner;    // GRU: h-hat (GARCH) ; LSTM: h-tilde
  Eigen::VectorXd h;
  // GARCH gate, first layer only
  double eps2_prev = 0, sigma2_prev = 0, sigma2 = 0;
  Eigen::VectorXd g, tanh_g;
};

struct ForwardTrace {
  std::vector<std::vector<StepCache>> layers;  // [layer][step]
  std::vector<Eigen::MatrixXd> dropout_masks;  // per layer >= 1: hidden x steps, scaled
  double pre_activation = 0;
  double sigma_hat = 0;
};

/// Bernoulli masks for inter-layer dropout. Empty when rate == 0.
std::vector<Eigen::MatrixXd> make_dropout_masks(const NetworkShape& shape, int steps,
                                                double rate, std::uint64_t& rng_state);

/// Runs the stack over one input window. `masks` may be empty (evaluation).
ForwardTrace stack_forward(const Network& net, const WindowSample& sample,
                           const std::vector<Eigen::MatrixXd>& masks = {});

double predict(const Network& net, const WindowSample& sample);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

}  // namespace garchrnn
