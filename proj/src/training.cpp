// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "garchrnn/error.hpp"

namespace garchrnn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(lr_factor > 0 && lr_factor < 1)) throw ConfigError("lr_factor must lie in (0, 1)");
  if (lr_patience < 1) throw ConfigError("lr_patience must be at least 1");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must lie in [0, 1)");
  if (max_grad_norm < 0) throw ConfigError("max_grad_norm must be non-negative");
  if (hidden_dim < 1 || num_layers < 1) throw ConfigError("network sizes must be positive");
  if (horizon < 1) throw ConfigError("horizon must be positive");
}

double loss_mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty() || predictions.size() != targets.size())
    throw std::invalid_argument("loss_mse: need equal, non-empty inputs");
  double s = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    s += e * e;
  }
  return s / static_cast<double>(predictions.size());
}

void adam_step(std::span<double> theta, std::span<const double> grad, AdamMoments& moments,
               double lr, long t, double beta1, double beta2, double eps) {
  if (grad.size() != theta.size()) throw std::invalid_argument("adam_step: shape mismatch");
  if (t < 1) throw std::invalid_argument("adam_step: step count starts at 1");
  if (moments.m.empty()) {
    moments.m.assign(theta.size(), 0.0);
    moments.v.assign(theta.size(), 0.0);
  }
  if (moments.m.size() != theta.size()) throw std::invalid_argument("adam_step: moment shape mismatch");
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    moments.m[i] = beta1 * moments.m[i] + (1 - beta1) * grad[i];
    moments.v[i] = beta2 * moments.v[i] + (1 - beta2) * grad[i] * grad[i];
    const double m_hat = moments.m[i] / c1;
    const double v_hat = moments.v[i] / c2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

PlateauScheduler::PlateauScheduler(double lr, double factor, int patience, double min_lr)
    : lr_(lr), factor_(factor), min_lr_(min_lr), patience_(patience) {
  if (!(factor > 0 && factor < 1)) throw std::invalid_argument("plateau factor must lie in (0, 1)");
}

double PlateauScheduler::step(double val_loss) {
  if (!best_ || val_loss < *best_ * (1.0 - 1e-4)) {
    best_ = val_loss;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= patience_) {
    lr_ = std::max(lr_ * factor_, min_lr_);
    bad_epochs_ = 0;
  }
  return lr_;
}

double plateau_scheduler(std::span<const double> history, double lr, double factor,
                         int lr_patience, double min_lr) {
  PlateauScheduler s(lr, factor, lr_patience, min_lr);
  for (double v : history) s.step(v);
  return s.lr();
}

StopDecision early_stopper(std::span<const double> history, int patience) {
  if (patience < 1) throw std::invalid_argument("early_stopper: patience must be >= 1");
  StopDecision d;
  if (history.empty()) return d;
  d.best_epoch = static_cast<std::size_t>(
      std::min_element(history.begin(), history.end()) - history.begin());
  d.stop = history.size() - 1 - d.best_epoch >= static_cast<std::size_t>(patience);
  return d;
}

NetworkTrainable::NetworkTrainable(Network net, double dropout)
    : net_(std::move(net)), grads_(Parameters::zeros(net_.shape)), dropout_(dropout) {}

std::vector<ParamView> NetworkTrainable::parameters() {
  return parameter_views(net_.params, net_.shape);
}

std::vector<ParamView> NetworkTrainable::gradient_views() {
  return parameter_views(grads_, net_.shape);
}

double NetworkTrainable::loss_and_gradient(std::span<const WindowSample* const> batch,
                                           std::uint64_t& dropout_rng) {
  Batch b;
  b.samples.assign(batch.begin(), batch.end());
  if (dropout_ > 0 && net_.shape.num_layers > 1) {
    for (const auto* s : batch)
      b.masks.push_back(make_dropout_masks(net_.shape, static_cast<int>(s->inputs.rows()),
                                           dropout_, dropout_rng));
  }
  auto result = bptt_gradients(net_, b);
  grads_ = std::move(result.grads);
  return result.loss;
}

double NetworkTrainable::evaluate(std::span<const WindowSample> samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
  double s = 0;
  for (const auto& sample : samples) {
    const double e = predict(net_, sample) - sample.target;
    s += e * e;
  }
  return s / static_cast<double>(samples.size());
}

double TrainReport::mean_epoch_seconds() const {
  if (epoch_seconds.empty()) return 0;
  return std::accumulate(epoch_seconds.begin(), epoch_seconds.end(), 0.0) /
         static_cast<double>(epoch_seconds.size());
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Fisher-Yates with a portable generator, so the order is reproducible
// across standard libraries.
void shuffle(std::vector<std::size_t>& idx, std::uint64_t seed) {
  std::uint64_t state = seed;
  for (std::size_t i = idx.size(); i > 1; --i) {
    state = mix(state);
    std::swap(idx[i - 1], idx[state % i]);
  }
}

std::vector<double> snapshot(Trainable& model) {
  std::vector<double> out;
  for (const auto& v : model.parameters()) out.insert(out.end(), v.values.begin(), v.values.end());
  return out;
}

void restore(Trainable& model, const std::vector<double>& values) {
  std::size_t k = 0;
  for (auto& v : model.parameters())
    for (double& x : v.values) x = values[k++];
}

}  // namespace

TrainReport train(Trainable& model, std::span<const WindowSample> train_set,
                  std::span<const WindowSample> val_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty() || val_set.empty())
    throw DataError("train: training and validation splits must be non-empty");

  TrainReport rep;
  rep.train_mse.push_back(model.evaluate(train_set));
  rep.val_mse.push_back(model.evaluate(val_set));
  rep.learning_rate.push_back(config.learning_rate);
  rep.best_epoch = 0;
  rep.best_val_mse = rep.val_mse[0];
  if (!std::isfinite(rep.best_val_mse)) {
    rep.diverged = true;
    rep.divergence_reason = "non-finite validation loss before training";
    return rep;
  }
  std::vector<double> best = snapshot(model);

  std::vector<AdamMoments> moments(model.parameters().size());
  PlateauScheduler scheduler(config.learning_rate, config.lr_factor, config.lr_patience,
                             config.min_lr);
  double lr = config.learning_rate;
  long adam_t = 0;
  std::vector<std::size_t> order(train_set.size());
  std::vector<const WindowSample*> batch;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, mix(config.seed) ^ static_cast<std::uint64_t>(epoch));
    std::uint64_t dropout_rng = mix(config.seed + 0x5bd1e995ULL * static_cast<std::uint64_t>(epoch));

    double loss_sum = 0;
    std::size_t n_seen = 0;
    bool finite = true;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      double loss = 0;
      try {
        loss = model.loss_and_gradient(batch, dropout_rng);
      } catch (const DivergenceError& e) {
        finite = false;
        rep.divergence_reason = e.what();
        break;
      }
      if (!std::isfinite(loss)) {
        finite = false;
        rep.divergence_reason = "non-finite training loss in epoch " + std::to_string(epoch);
        break;
      }
      loss_sum += loss * static_cast<double>(batch.size());
      n_seen += batch.size();

      auto params = model.parameters();
      auto grads = model.gradient_views();
      if (config.max_grad_norm > 0) {
        double sq = 0;
        for (const auto& g : grads)
          for (double v : g.values) sq += v * v;
        const double norm = std::sqrt(sq);
        if (norm > config.max_grad_norm)
          for (auto& g : grads)
            for (double& v : g.values) v *= config.max_grad_norm / norm;
      }
      ++adam_t;
      for (std::size_t k = 0; k < params.size(); ++k)
        adam_step(params[k].values, grads[k].values, moments[k], lr, adam_t);
    }

    double val = finite ? model.evaluate(val_set) : NAN;
    if (finite && !std::isfinite(val)) {
      rep.divergence_reason = "non-finite validation loss in epoch " + std::to_string(epoch);
      finite = false;
    }
    rep.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (!finite) {
      rep.diverged = true;
      break;
    }
    rep.train_mse.push_back(loss_sum / static_cast<double>(n_seen));
    rep.val_mse.push_back(val);
    if (val < rep.best_val_mse) {
      rep.best_val_mse = val;
      rep.best_epoch = static_cast<std::size_t>(epoch);
      best = snapshot(model);
    }
    lr = scheduler.step(val);
    rep.learning_rate.push_back(lr);
    if (early_stopper(rep.val_mse, config.patience).stop) {
      rep.stopped_early = true;
      break;
    }
  }
  restore(model, best);
  rep.optimizer.step = adam_t;
  rep.optimizer.moments = std::move(moments);
  return rep;
}

TrainedNetwork train_network(Network init, std::span<const WindowSample> train_set,
                             std::span<const WindowSample> val_set, const TrainConfig& config) {
  NetworkTrainable model(std::move(init), config.dropout);
  TrainReport rep = train(model, train_set, val_set, config);
  Network net = model.network();
  if (uses_garch(net.shape.kind)) {
    rep.gate = net.params.gate.constrained();
    rep.coupling = net.params.gate.coupling;
  }
  return {std::move(net), std::move(rep)};
}

nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json j = {{"train_mse", r.train_mse},
                      {"val_mse", r.val_mse},
                      {"learning_rate", r.learning_rate},
                      {"best_epoch", r.best_epoch},
                      {"best_val_mse", r.best_val_mse},
                      {"stopped_early", r.stopped_early},
                      {"diverged", r.diverged}};
  if (r.diverged) j["divergence_reason"] = r.divergence_reason;
  if (r.gate) {
    j["gate"] = {{"omega", r.gate->omega},
                 {"alpha", r.gate->alpha},
                 {"beta", r.gate->beta},
                 {"alpha_plus_beta", r.gate->alpha + r.gate->beta},
                 {"coupling", r.coupling.value_or(0.0)}};
  }
  return j;
}

nlohmann::json timing_json(const TrainReport& r) {
  return {{"epoch_seconds", r.epoch_seconds}, {"mean_epoch_seconds", r.mean_epoch_seconds()}};
}

nlohmann::json to_json(const OptimizerState& s) {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& mo : s.moments) m.push_back({{"m", mo.m}, {"v", mo.v}});
  return {{"step", s.step}, {"moments", m}};
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},       {"patience", c.patience},
          {"lr_factor", c.lr_factor},         {"lr_patience", c.lr_patience},
          {"min_lr", c.min_lr},               {"dropout", c.dropout},
          {"max_grad_norm", c.max_grad_norm}, {"seed", c.seed},
          {"hidden_dim", c.hidden_dim},       {"num_layers", c.num_layers},
          {"horizon", c.horizon}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.lr_factor = j.value("lr_factor", c.lr_factor);
    c.lr_patience = j.value("lr_patience", c.lr_patience);
    c.min_lr = j.value("min_lr", c.min_lr);
    c.dropout = j.value("dropout", c.dropout);
    c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
    c.seed = j.value("seed", c.seed);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.horizon = j.value("horizon", c.horizon);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace garchrnn
