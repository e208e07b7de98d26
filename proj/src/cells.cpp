// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/cells.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cell_steps.hpp"
#include "garchrnn/stats.hpp"

namespace garchrnn {

template <int Gates>
void GatedWeights<Gates>::check_shapes() const {
  const auto H = U.cols();
  if (H < 1 || U.rows() != Gates * H || W.rows() != Gates * H || b.size() != Gates * H)
    throw std::invalid_argument("recurrent weights: inconsistent gate block shapes");
}

template struct GatedWeights<3>;
template struct GatedWeights<4>;

GarchTriple GarchGateParams::constrained() const {
  return constrain_garch(u_omega, u_s, u_a, lambda_max);
}

GarchTriple constrain_garch(double u_omega, double u_s, double u_a, double lambda_max) {
  const double s = lambda_max * std::min(sigmoid(u_s), 1.0 - detail::kPersistenceMargin);
  const double a = sigmoid(u_a);
  return {std::max(softplus(u_omega), detail::kOmegaFloor), s * a, s * (1.0 - a)};
}

namespace detail {

void gate_step(const GarchGateParams& gate, double eps2_prev, double sigma2_prev,
               StepCache& cache) {
  const auto [omega, alpha, beta] = gate.constrained();
  cache.eps2_prev = eps2_prev;
  cache.sigma2_prev = sigma2_prev;
  cache.sigma2 = omega + alpha * eps2_prev + beta * sigma2_prev;
  cache.g = gate.W_g * cache.sigma2 + gate.b_g;
  cache.tanh_g = cache.g.array().tanh();
}

void gru_step(const GruParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
              bool coupled, double coupling, StepCache& cache) {
  const int H = p.hidden_dim();
  cache.x = x;
  cache.h_prev = h_prev;
  cache.gates.resize(3 * H);
  // Update and reset gates share one product.
  const Eigen::VectorXd zr =
      p.W.topRows(2 * H) * x + p.U.topRows(2 * H) * h_prev + p.b.head(2 * H);
  cache.gates.head(2 * H) = sigmoid_vec(zr);
  const auto z = cache.gates.segment(0, H);
  const auto r = cache.gates.segment(H, H);
  const Eigen::VectorXd rh = r.cwiseProduct(h_prev);
  cache.gates.segment(2 * H, H) =
      (p.W_gate(GruParams::h) * x + p.U_gate(GruParams::h) * rh + p.b_gate(GruParams::h))
          .array()
          .tanh();
  const auto h_tilde = cache.gates.segment(2 * H, H);
  if (coupled) {
    cache.inner = (1.0 - z.array()) * h_tilde.array() + z.array() * h_prev.array();
    cache.h = (cache.inner + coupling * cache.g).array().tanh();
  } else {
    cache.h = (1.0 - z.array()) * h_prev.array() + z.array() * h_tilde.array();
  }
}

void lstm_step(const LstmParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
               const Eigen::VectorXd& c_prev, bool coupled, double coupling,
               StepCache& cache) {
  const int H = p.hidden_dim();
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  const Eigen::VectorXd a = p.W * x + p.U * h_prev + p.b;
  cache.gates.resize(4 * H);
  cache.gates.head(3 * H) = sigmoid_vec(a.head(3 * H));
  cache.gates.tail(H) = a.tail(H).array().tanh();
  const auto f = cache.gates.segment(0, H);
  const auto i = cache.gates.segment(H, H);
  const auto o = cache.gates.segment(2 * H, H);
  const auto c_tilde = cache.gates.segment(3 * H, H);
  cache.c = f.cwiseProduct(c_prev) + i.cwiseProduct(c_tilde);
  cache.tanh_c = cache.c.array().tanh();
  cache.inner = o.cwiseProduct(cache.tanh_c);
  if (coupled)
    cache.h = (1.0 + coupling * cache.tanh_g.array()) * cache.inner.array();
  else
    cache.h = cache.inner;
}

}  // namespace detail

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_gate(const GarchGateParams& gate, int hidden) {
  require(gate.W_g.size() == hidden && gate.b_g.size() == hidden,
          "GARCH gate projection does not match the hidden dimension");
}

void check_state(const CellState& s) {
  require(std::isfinite(s.sigma2_prev) && s.sigma2_prev > 0, "cell state: sigma2_prev must be > 0");
  require(std::isfinite(s.eps2_prev) && s.eps2_prev >= 0, "cell state: eps2_prev must be >= 0");
}

}  // namespace

Eigen::VectorXd gru_forward(const GruParams& p, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& h_prev) {
  p.check_shapes();
  require(x.size() == p.input_dim() && h_prev.size() == p.hidden_dim(),
          "gru_forward: input or hidden size mismatch");
  StepCache c;
  detail::gru_step(p, x, h_prev, false, 0.0, c);
  return c.h;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> lstm_forward(const LstmParams& p,
                                                         const Eigen::VectorXd& x,
                                                         const Eigen::VectorXd& h_prev,
                                                         const Eigen::VectorXd& c_prev) {
  p.check_shapes();
  require(x.size() == p.input_dim() && h_prev.size() == p.hidden_dim() &&
              c_prev.size() == p.hidden_dim(),
          "lstm_forward: input, hidden or cell size mismatch");
  StepCache c;
  detail::lstm_step(p, x, h_prev, c_prev, false, 0.0, c);
  return {c.h, c.c};
}

GateOutput garch_gate(const GarchGateParams& gate, double eps2_prev, double sigma2_prev) {
  require(std::isfinite(eps2_prev) && std::isfinite(sigma2_prev),
          "garch_gate: non-finite inputs");
  require(sigma2_prev >= 0 && eps2_prev >= 0, "garch_gate: negative variance inputs");
  require(gate.W_g.size() == gate.b_g.size(), "garch_gate: projection size mismatch");
  StepCache c;
  detail::gate_step(gate, eps2_prev, sigma2_prev, c);
  return {c.g, c.sigma2};
}

GarchCellOutput garch_gru_cell(const GruParams& p, const GarchGateParams& gate,
                               const Eigen::VectorXd& x, double eps_t,
                               const CellState& state) {
  p.check_shapes();
  check_gate(gate, p.hidden_dim());
  check_state(state);
  require(x.size() == p.input_dim() && state.h.size() == p.hidden_dim(),
          "garch_gru_cell: input or hidden size mismatch");
  StepCache c;
  detail::gate_step(gate, state.eps2_prev, state.sigma2_prev, c);
  detail::gru_step(p, x, state.h, true, gate.coupling, c);
  GarchCellOutput out;
  out.h = c.h;
  out.pre_coupling = c.inner;
  out.g = c.g;
  out.state.h = c.h;
  out.state.eps2_prev = eps_t * eps_t;
  out.state.sigma2_prev = c.sigma2;
  return out;
}

GarchCellOutput garch_lstm_cell(const LstmParams& p, const GarchGateParams& gate,
                                const Eigen::VectorXd& x, double eps_t,
                                const CellState& state) {
  p.check_shapes();
  check_gate(gate, p.hidden_dim());
  check_state(state);
  require(x.size() == p.input_dim() && state.h.size() == p.hidden_dim() &&
              state.c.size() == p.hidden_dim(),
          "garch_lstm_cell: input, hidden or cell size mismatch");
  StepCache c;
  detail::gate_step(gate, state.eps2_prev, state.sigma2_prev, c);
  detail::lstm_step(p, x, state.h, state.c, true, gate.coupling, c);
  GarchCellOutput out;
  out.h = c.h;
  out.pre_coupling = c.inner;
  out.g = c.g;
  out.state.h = c.h;
  out.state.c = c.c;
  out.state.eps2_prev = eps_t * eps_t;
  out.state.sigma2_prev = c.sigma2;
  return out;
}

double volatility_head(const Eigen::VectorXd& h, const Eigen::VectorXd& W_out, double b_out) {
  require(h.size() == W_out.size(), "volatility_head: size mismatch");
  return std::sqrt(softplus(W_out.dot(h) + b_out) + detail::kHeadFloor);
}

}  // namespace garchrnn
