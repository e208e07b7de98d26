// SPDX-License-Identifier: Apache-2.0
#pragma once

// Backpropagation through time, finite-difference gradient oracle, Adam,
// plateau learning-rate schedule, early stopping and the training loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "garchrnn/network.hpp"

namespace garchrnn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 20;
  double lr_factor = 0.5;
  int lr_patience = 5;
  double min_lr = 1e-6;
  double dropout = 0.1;
  double max_grad_norm = 0;  // 0 disables the guard
  std::uint64_t seed = 0;
  int hidden_dim = 8;
  int num_layers = 1;
  int horizon = 1;

  void validate() const;
};

double loss_mse(std::span<const double> predictions, std::span<const double> targets);

struct Batch {
  std::vector<const WindowSample*> samples;
  /// Per-sample dropout masks; empty for evaluation-mode passes.
  std::vector<std::vector<Eigen::MatrixXd>> masks;
};

struct BatchGradient {
  Parameters grads;  // shape-matched to the network parameters
  double loss = 0;
};

/// Exact gradient of the batch-mean squared error of the volatility head.
BatchGradient bptt_gradients(const Network& net, const Batch& batch);

/// Batch-mean squared error, using the batch's dropout masks if present.
double batch_loss(const Network& net, const Batch& batch);

/// Central differences of batch_loss with respect to every parameter.
Parameters finite_diff_oracle(const Network& net, const Batch& batch, double step);

/// Central difference of a scalar function (used for toy checks).
double central_difference(const std::function<double(double)>& f, double x, double step);

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

/// Adam state at the end of training, one moment pair per parameter view.
struct OptimizerState {
  long step = 0;
  std::vector<AdamMoments> moments;
};

/// One bias-corrected Adam update of theta in place. `t` is the 1-based step.
void adam_step(std::span<double> theta, std::span<const double> grad, AdamMoments& moments,
               double lr, long t, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

/// Halves (by `factor`) the learning rate once validation loss fails to
/// improve by more than a relative 1e-4 for `patience` consecutive epochs.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor, int patience, double min_lr = 1e-6);
  double step(double val_loss);
  double lr() const { return lr_; }

 private:
  double lr_, factor_, min_lr_;
  int patience_;
  int bad_epochs_ = 0;
  std::optional<double> best_;
};

/// Replays a validation history through a fresh scheduler.
double plateau_scheduler(std::span<const double> history, double lr, double factor,
                         int lr_patience, double min_lr = 1e-6);

struct StopDecision {
  bool stop = false;
  std::size_t best_epoch = 0;
};

/// Earliest argmin of the history; stop once the last epoch is `patience`
/// or more epochs past it.
StopDecision early_stopper(std::span<const double> history, int patience);

/// What the training loop needs from a model.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual std::vector<ParamView> parameters() = 0;
  /// Mean training loss of the batch with `dropout_rng` driving any dropout;
  /// gradients are written into gradient_views(), shape-matched to
  /// parameters().
  virtual double loss_and_gradient(std::span<const WindowSample* const> batch,
                                   std::uint64_t& dropout_rng) = 0;
  virtual std::vector<ParamView> gradient_views() = 0;
  /// Mean squared error in evaluation mode.
  virtual double evaluate(std::span<const WindowSample> samples) = 0;
};

class NetworkTrainable : public Trainable {
 public:
  NetworkTrainable(Network net, double dropout);

  std::vector<ParamView> parameters() override;
  double loss_and_gradient(std::span<const WindowSample* const> batch,
                           std::uint64_t& dropout_rng) override;
  std::vector<ParamView> gradient_views() override;
  double evaluate(std::span<const WindowSample> samples) override;

  const Network& network() const { return net_; }

 private:
  Network net_;
  Parameters grads_;
  double dropout_;
};

struct TrainReport {
  /// Index 0 is the untrained model; index e >= 1 follows training epoch e.
  std::vector<double> train_mse;
  std::vector<double> val_mse;
  std::vector<double> learning_rate;
  std::vector<double> epoch_seconds;  // one entry per trained epoch
  std::size_t best_epoch = 0;
  double best_val_mse = 0;
  bool stopped_early = false;
  bool diverged = false;
  std::string divergence_reason;
  std::optional<GarchTriple> gate;
  std::optional<double> coupling;
  OptimizerState optimizer;

  double mean_epoch_seconds() const;
};

/// Runs the training loop; on return the model holds the best-validation
/// parameters.
TrainReport train(Trainable& model, std::span<const WindowSample> train_set,
                  std::span<const WindowSample> val_set, const TrainConfig& config);

struct TrainedNetwork {
  Network net;
  TrainReport report;
};

TrainedNetwork train_network(Network init, std::span<const WindowSample> train_set,
                             std::span<const WindowSample> val_set, const TrainConfig& config);

/// Loss and learning-rate arrays only; timing goes to timing_json.
nlohmann::json to_json(const TrainReport& r);
nlohmann::json timing_json(const TrainReport& r);
nlohmann::json to_json(const OptimizerState& s);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});

}  // namespace garchrnn
