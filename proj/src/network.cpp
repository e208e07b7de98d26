// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cell_steps.hpp"
#include "garchrnn/error.hpp"
#include "garchrnn/stats.hpp"

namespace garchrnn {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gru: return "gru";
    case ModelKind::lstm: return "lstm";
    case ModelKind::garch_gru: return "garch_gru";
    case ModelKind::garch_lstm: return "garch_lstm";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "gru") return ModelKind::gru;
  if (name == "lstm") return ModelKind::lstm;
  if (name == "garch_gru") return ModelKind::garch_gru;
  if (name == "garch_lstm") return ModelKind::garch_lstm;
  throw ConfigError("unknown recurrent model '" + name +
                    "' (expected gru, lstm, garch_gru or garch_lstm)");
}

Parameters Parameters::zeros(const NetworkShape& shape) {
  if (shape.num_layers < 1 || shape.hidden_dim < 1 || shape.input_dim < 1)
    throw ConfigError("network needs at least one layer and positive dimensions");
  Parameters p;
  for (int l = 0; l < shape.num_layers; ++l) {
    const int in = l == 0 ? shape.input_dim : shape.hidden_dim;
    if (uses_lstm(shape.kind))
      p.lstm.push_back(LstmParams::zeros(in, shape.hidden_dim));
    else
      p.gru.push_back(GruParams::zeros(in, shape.hidden_dim));
  }
  p.gate.W_g = Eigen::VectorXd::Zero(shape.hidden_dim);
  p.gate.b_g = Eigen::VectorXd::Zero(shape.hidden_dim);
  p.W_out = Eigen::VectorXd::Zero(shape.hidden_dim);
  return p;
}

namespace {

std::span<double> span_of(Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<double> span_of(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

template <class Layer>
void add_layer_views(std::vector<ParamView>& out, std::vector<Layer>& layers) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    out.push_back({prefix + "W", span_of(layers[l].W)});
    out.push_back({prefix + "U", span_of(layers[l].U)});
    out.push_back({prefix + "b", span_of(layers[l].b)});
  }
}

// Uniform in [0, 1) from the top 53 bits, identical across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<ParamView> parameter_views(Parameters& p, const NetworkShape& shape) {
  std::vector<ParamView> out;
  if (uses_lstm(shape.kind))
    add_layer_views(out, p.lstm);
  else
    add_layer_views(out, p.gru);
  if (uses_garch(shape.kind)) {
    out.push_back({"gate.u_omega", {&p.gate.u_omega, 1}});
    out.push_back({"gate.u_s", {&p.gate.u_s, 1}});
    out.push_back({"gate.u_a", {&p.gate.u_a, 1}});
    out.push_back({"gate.W_g", span_of(p.gate.W_g)});
    out.push_back({"gate.b_g", span_of(p.gate.b_g)});
    out.push_back({"gate.coupling", {&p.gate.coupling, 1}});
  }
  out.push_back({"head.W_out", span_of(p.W_out)});
  out.push_back({"head.b_out", {&p.b_out, 1}});
  return out;
}

std::size_t parameter_count(const NetworkShape& shape) {
  auto p = Parameters::zeros(shape);
  std::size_t n = 0;
  for (const auto& v : parameter_views(p, shape)) n += v.values.size();
  return n;
}

Network Network::initialize(const NetworkShape& shape, double lambda_max, double mu,
                            double sigma2_init, std::uint64_t seed) {
  if (!(lambda_max > 0 && lambda_max <= 1))
    throw ConfigError("lambda_max must lie in (0, 1]");
  if (!(sigma2_init > 0)) throw DataError("initial variance must be positive");
  Network net;
  net.shape = shape;
  net.params = Parameters::zeros(shape);
  net.mu = mu;
  net.sigma2_init = sigma2_init;
  net.seed = seed;

  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden_dim));
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = bound * (2.0 * unit_uniform(rng) - 1.0);
  };
  auto init_layers = [&](auto& layers) {
    for (auto& layer : layers) {
      fill(layer.W);
      fill(layer.U);
    }
  };
  init_layers(net.params.gru);
  init_layers(net.params.lstm);

  auto& gate = net.params.gate;
  gate.lambda_max = lambda_max;
  if (uses_garch(shape.kind)) {
    const double persistence = std::min(0.9, 0.95 * lambda_max);
    const double alpha = persistence / 9.0;
    gate.u_s = logit(persistence / lambda_max);
    gate.u_a = logit(alpha / persistence);
    gate.u_omega = softplus_inv(sigma2_init * (1.0 - persistence));
    fill(gate.W_g);
    gate.coupling = 0.1;
  }
  fill(net.params.W_out);
  return net;
}

std::vector<Eigen::MatrixXd> make_dropout_masks(const NetworkShape& shape, int steps,
                                                double rate, std::uint64_t& rng_state) {
  std::vector<Eigen::MatrixXd> masks;
  if (rate <= 0 || shape.num_layers < 2) return masks;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (int l = 1; l < shape.num_layers; ++l) {
    Eigen::MatrixXd m(shape.hidden_dim, steps);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double u = static_cast<double>(splitmix64(rng_state) >> 11) * 0x1.0p-53;
      m.data()[i] = u < rate ? 0.0 : keep_scale;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

ForwardTrace stack_forward(const Network& net, const WindowSample& sample,
                           const std::vector<Eigen::MatrixXd>& masks) {
  const auto& shape = net.shape;
  const auto steps = static_cast<int>(sample.inputs.rows());
  if (steps < 1) throw std::invalid_argument("stack_forward: empty window");
  if (sample.inputs.cols() != shape.input_dim)
    throw std::invalid_argument("stack_forward: input feature count mismatch");
  if (sample.returns.size() != static_cast<std::size_t>(steps))
    throw std::invalid_argument("stack_forward: returns do not cover the window");
  if (!masks.empty() && masks.size() != static_cast<std::size_t>(shape.num_layers - 1))
    throw std::invalid_argument("stack_forward: dropout mask count mismatch");

  const bool lstm = uses_lstm(shape.kind);
  const bool garch = uses_garch(shape.kind);
  const int H = shape.hidden_dim;
  ForwardTrace tr;
  tr.layers.resize(static_cast<std::size_t>(shape.num_layers));
  tr.dropout_masks = masks;

  for (int l = 0; l < shape.num_layers; ++l) {
    auto& caches = tr.layers[static_cast<std::size_t>(l)];
    caches.resize(static_cast<std::size_t>(steps));
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
    const bool coupled = garch && l == 0;
    for (int t = 0; t < steps; ++t) {
      auto& cache = caches[static_cast<std::size_t>(t)];
      Eigen::VectorXd x;
      if (l == 0) {
        x = sample.inputs.row(t).transpose();
      } else {
        x = tr.layers[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(t)].h;
        if (!masks.empty()) x = x.cwiseProduct(masks[static_cast<std::size_t>(l - 1)].col(t));
      }
      if (coupled) {
        const double prev_r = t == 0 ? sample.prev_return : sample.returns[static_cast<std::size_t>(t - 1)];
        const double eps = prev_r - net.mu;
        const double sigma2_prev =
            t == 0 ? net.sigma2_init : caches[static_cast<std::size_t>(t - 1)].sigma2;
        detail::gate_step(net.params.gate, eps * eps, sigma2_prev, cache);
      }
      if (lstm) {
        detail::lstm_step(net.params.lstm[static_cast<std::size_t>(l)], x, h, c, coupled,
                          net.params.gate.coupling, cache);
        c = cache.c;
      } else {
        detail::gru_step(net.params.gru[static_cast<std::size_t>(l)], x, h, coupled,
                         net.params.gate.coupling, cache);
      }
      h = cache.h;
    }
  }
  const auto& last = tr.layers.back().back().h;
  tr.pre_activation = net.params.W_out.dot(last) + net.params.b_out;
  tr.sigma_hat = std::sqrt(softplus(tr.pre_activation) + detail::kHeadFloor);
  return tr;
}

double predict(const Network& net, const WindowSample& sample) {
  return stack_forward(net, sample).sigma_hat;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw DataError("checkpoint: matrix data does not match its dimensions");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

constexpr const char* kGruGateNames[] = {"z", "r", "h"};
constexpr const char* kLstmGateNames[] = {"f", "i", "o", "c"};

template <class Layer>
nlohmann::json layer_json(const Layer& layer, const char* const* names) {
  nlohmann::json j;
  for (int g = 0; g < Layer::gate_count; ++g) {
    const std::string n = names[g];
    j["W_" + n] = matrix_json(layer.W_gate(g));
    j["U_" + n] = matrix_json(layer.U_gate(g));
    j["b_" + n] = vector_json(layer.b_gate(g));
  }
  return j;
}

template <class Layer>
Layer layer_from_json(const nlohmann::json& j, const char* const* names, int in, int hidden) {
  Layer layer = Layer::zeros(in, hidden);
  for (int g = 0; g < Layer::gate_count; ++g) {
    const std::string n = names[g];
    const auto W = matrix_from_json(j.at("W_" + n));
    const auto U = matrix_from_json(j.at("U_" + n));
    const auto b = vector_from_json(j.at("b_" + n));
    if (W.rows() != hidden || W.cols() != in || U.rows() != hidden || U.cols() != hidden ||
        b.size() != hidden)
      throw DataError("checkpoint: gate '" + n + "' has unexpected dimensions");
    layer.W_gate(g) = W;
    layer.U_gate(g) = U;
    layer.b_gate(g) = b;
  }
  return layer;
}

}  // namespace

nlohmann::json to_json(const Network& net) {
  const auto& s = net.shape;
  nlohmann::json j;
  j["model"] = to_string(s.kind);
  j["input_dim"] = s.input_dim;
  j["hidden_dim"] = s.hidden_dim;
  j["num_layers"] = s.num_layers;
  j["mu"] = net.mu;
  j["sigma2_init"] = net.sigma2_init;
  j["seed"] = net.seed;
  j["lambda_max"] = net.params.gate.lambda_max;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.params.gru) layers.push_back(layer_json(l, kGruGateNames));
  for (const auto& l : net.params.lstm) layers.push_back(layer_json(l, kLstmGateNames));
  j["layers"] = layers;
  if (uses_garch(s.kind)) {
    const auto& g = net.params.gate;
    const auto c = g.constrained();
    j["gate"] = {{"u_omega", g.u_omega}, {"u_s", g.u_s},   {"u_a", g.u_a},
                 {"omega", c.omega},     {"alpha", c.alpha}, {"beta", c.beta},
                 {"W_g", vector_json(g.W_g)}, {"b_g", vector_json(g.b_g)},
                 {"coupling", g.coupling}};
  }
  j["head"] = {{"W_out", vector_json(net.params.W_out)}, {"b_out", net.params.b_out}};
  return j;
}

Network network_from_json(const nlohmann::json& j) {
  try {
    Network net;
    auto& s = net.shape;
    s.kind = parse_model_kind(j.at("model").get<std::string>());
    s.input_dim = j.at("input_dim").get<int>();
    s.hidden_dim = j.at("hidden_dim").get<int>();
    s.num_layers = j.at("num_layers").get<int>();
    net.params = Parameters::zeros(s);
    net.mu = j.at("mu").get<double>();
    net.sigma2_init = j.at("sigma2_init").get<double>();
    net.seed = j.at("seed").get<std::uint64_t>();
    net.params.gate.lambda_max = j.at("lambda_max").get<double>();
    const auto& layers = j.at("layers");
    if (layers.size() != static_cast<std::size_t>(s.num_layers))
      throw DataError("checkpoint: layer count mismatch");
    for (int l = 0; l < s.num_layers; ++l) {
      const int in = l == 0 ? s.input_dim : s.hidden_dim;
      const auto& lj = layers.at(static_cast<std::size_t>(l));
      if (uses_lstm(s.kind))
        net.params.lstm[static_cast<std::size_t>(l)] =
            layer_from_json<LstmParams>(lj, kLstmGateNames, in, s.hidden_dim);
      else
        net.params.gru[static_cast<std::size_t>(l)] =
            layer_from_json<GruParams>(lj, kGruGateNames, in, s.hidden_dim);
    }
    if (uses_garch(s.kind)) {
      const auto& gj = j.at("gate");
      auto& g = net.params.gate;
      g.u_omega = gj.at("u_omega").get<double>();
      g.u_s = gj.at("u_s").get<double>();
      g.u_a = gj.at("u_a").get<double>();
      g.W_g = vector_from_json(gj.at("W_g"));
      g.b_g = vector_from_json(gj.at("b_g"));
      g.coupling = gj.at("coupling").get<double>();
      if (g.W_g.size() != s.hidden_dim || g.b_g.size() != s.hidden_dim)
        throw DataError("checkpoint: gate projection has unexpected size");
    }
    net.params.W_out = vector_from_json(j.at("head").at("W_out"));
    net.params.b_out = j.at("head").at("b_out").get<double>();
    if (net.params.W_out.size() != s.hidden_dim)
      throw DataError("checkpoint: head has unexpected size");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed network document: ") + e.what());
  }
}

}  // namespace garchrnn
