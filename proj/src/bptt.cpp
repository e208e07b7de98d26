// SPDX-License-Identifier: Apache-2.0
// Reverse-mode differentiation of the stacked cells, the GARCH gate
// recursion and the volatility head.

#include <cmath>
#include <stdexcept>
#include <string>

#include "cell_steps.hpp"
#include "garchrnn/error.hpp"
#include "garchrnn/stats.hpp"
#include "garchrnn/training.hpp"

namespace garchrnn {

namespace {

// Gradient of the gate's constrained triple, converted to the raw
// coordinates once per sample.
struct TripleGrad {
  double omega = 0, alpha = 0, beta = 0;
};

struct StepGrads {
  Eigen::VectorXd dx;
  Eigen::VectorXd dh_prev;
  Eigen::VectorXd dc_prev;
  Eigen::VectorXd dg;  // set for coupled steps
};

StepGrads gru_backward(const GruParams& p, GruParams& gp, const StepCache& c,
                       const Eigen::VectorXd& dh, bool coupled, double coupling,
                       double& dcoupling) {
  const int H = p.hidden_dim();
  const auto z = c.gates.segment(0, H).array();
  const auto r = c.gates.segment(H, H).array();
  const auto ht = c.gates.segment(2 * H, H).array();
  const auto hp = c.h_prev.array();

  StepGrads out;
  Eigen::ArrayXd dz, dht, dhp;
  if (coupled) {
    const Eigen::ArrayXd dpre = dh.array() * (1.0 - c.h.array().square());
    dcoupling += (dpre * c.g.array()).sum();
    out.dg = coupling * dpre.matrix();
    dz = dpre * (hp - ht);
    dht = dpre * (1.0 - z);
    dhp = dpre * z;
  } else {
    dz = dh.array() * (ht - hp);
    dht = dh.array() * z;
    dhp = dh.array() * (1.0 - z);
  }

  Eigen::VectorXd da(3 * H);
  da.segment(2 * H, H) = dht * (1.0 - ht.square());
  const Eigen::VectorXd rh = (r * hp).matrix();
  const Eigen::VectorXd drh = p.U_gate(GruParams::h).transpose() * da.segment(2 * H, H);
  const Eigen::ArrayXd dr = drh.array() * hp;
  dhp += drh.array() * r;
  da.segment(0, H) = dz * z * (1.0 - z);
  da.segment(H, H) = dr * r * (1.0 - r);

  gp.W.noalias() += da * c.x.transpose();
  gp.b += da;
  gp.U.topRows(2 * H).noalias() += da.head(2 * H) * c.h_prev.transpose();
  gp.U_gate(GruParams::h).noalias() += da.segment(2 * H, H) * rh.transpose();

  out.dh_prev = dhp.matrix() + p.U.topRows(2 * H).transpose() * da.head(2 * H);
  out.dx = p.W.transpose() * da;
  return out;
}

StepGrads lstm_backward(const LstmParams& p, LstmParams& gp, const StepCache& c,
                        const Eigen::VectorXd& dh, const Eigen::VectorXd& dc_next,
                        bool coupled, double coupling, double& dcoupling) {
  const int H = p.hidden_dim();
  const auto f = c.gates.segment(0, H).array();
  const auto i = c.gates.segment(H, H).array();
  const auto o = c.gates.segment(2 * H, H).array();
  const auto ct = c.gates.segment(3 * H, H).array();

  StepGrads out;
  Eigen::ArrayXd dht;
  if (coupled) {
    const auto tg = c.tanh_g.array();
    dht = dh.array() * (1.0 + coupling * tg);
    const Eigen::ArrayXd dh_inner = dh.array() * c.inner.array();
    dcoupling += (dh_inner * tg).sum();
    out.dg = (dh_inner * coupling * (1.0 - tg.square())).matrix();
  } else {
    dht = dh.array();
  }

  const auto tc = c.tanh_c.array();
  const Eigen::ArrayXd dc = dc_next.array() + dht * o * (1.0 - tc.square());
  Eigen::VectorXd da(4 * H);
  da.segment(0, H) = dc * c.c_prev.array() * f * (1.0 - f);
  da.segment(H, H) = dc * ct * i * (1.0 - i);
  da.segment(2 * H, H) = dht * tc * o * (1.0 - o);
  da.segment(3 * H, H) = dc * i * (1.0 - ct.square());

  gp.W.noalias() += da * c.x.transpose();
  gp.U.noalias() += da * c.h_prev.transpose();
  gp.b += da;

  out.dc_prev = (dc * f).matrix();
  out.dh_prev = p.U.transpose() * da;
  out.dx = p.W.transpose() * da;
  return out;
}

void check_finite(const Eigen::VectorXd& v, const char* what, int layer, int step) {
  if (!v.allFinite())
    throw DivergenceError(std::string("non-finite gradient in ") + what + " at layer " +
                          std::to_string(layer) + ", step " + std::to_string(step));
}

// Accumulates d(loss)/d(params) for one sample given d(loss)/d(sigma_hat).
void backward_sample(const Network& net, const ForwardTrace& tr, double dsigma,
                     Parameters& g, TripleGrad& triple) {
  const auto& shape = net.shape;
  const bool lstm = uses_lstm(shape.kind);
  const bool garch = uses_garch(shape.kind);
  const int H = shape.hidden_dim;
  const auto steps = static_cast<int>(tr.layers.front().size());

  const double da = dsigma * sigmoid(tr.pre_activation) / (2.0 * tr.sigma_hat);
  g.W_out += da * tr.layers.back().back().h;
  g.b_out += da;

  // Incoming gradient on each step's hidden output from the layer above.
  std::vector<Eigen::VectorXd> dh_in(static_cast<std::size_t>(steps), Eigen::VectorXd::Zero(H));
  dh_in.back() = da * net.params.W_out;

  for (int l = shape.num_layers - 1; l >= 0; --l) {
    const auto& caches = tr.layers[static_cast<std::size_t>(l)];
    const bool coupled = garch && l == 0;
    std::vector<Eigen::VectorXd> dh_below;
    if (l > 0) dh_below.assign(static_cast<std::size_t>(steps), Eigen::VectorXd::Zero(H));
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
    double ds2_next = 0;

    for (int t = steps - 1; t >= 0; --t) {
      const auto& c = caches[static_cast<std::size_t>(t)];
      const Eigen::VectorXd dh = dh_in[static_cast<std::size_t>(t)] + dh_next;
      StepGrads sg =
          lstm ? lstm_backward(net.params.lstm[static_cast<std::size_t>(l)],
                               g.lstm[static_cast<std::size_t>(l)], c, dh, dc_next, coupled,
                               net.params.gate.coupling, g.gate.coupling)
               : gru_backward(net.params.gru[static_cast<std::size_t>(l)],
                              g.gru[static_cast<std::size_t>(l)], c, dh, coupled,
                              net.params.gate.coupling, g.gate.coupling);
      check_finite(sg.dh_prev, "hidden state", l, t);
      dh_next = std::move(sg.dh_prev);
      if (lstm) dc_next = std::move(sg.dc_prev);

      if (coupled) {
        // g = W_g * sigma2 + b_g ; sigma2 = omega + alpha*eps2_prev + beta*sigma2_prev
        g.gate.W_g += sg.dg * c.sigma2;
        g.gate.b_g += sg.dg;
        const double ds2 = net.params.gate.W_g.dot(sg.dg) + ds2_next;
        if (!std::isfinite(ds2))
          throw DivergenceError("non-finite gradient in gate variance at step " +
                                std::to_string(t));
        triple.omega += ds2;
        triple.alpha += ds2 * c.eps2_prev;
        triple.beta += ds2 * c.sigma2_prev;
        ds2_next = ds2 * net.params.gate.constrained().beta;
      }
      if (l > 0) {
        const auto& mask = tr.dropout_masks;
        dh_below[static_cast<std::size_t>(t)] =
            mask.empty() ? sg.dx
                         : Eigen::VectorXd(sg.dx.cwiseProduct(
                               mask[static_cast<std::size_t>(l - 1)].col(t)));
      }
    }
    if (l > 0) dh_in = std::move(dh_below);
  }
}

void add_triple_to_raw(const GarchGateParams& gate, const TripleGrad& t, GarchGateParams& g) {
  const double sw = sigmoid(gate.u_omega);
  const double ss = sigmoid(gate.u_s);
  const double sa = sigmoid(gate.u_a);
  const bool s_capped = ss > 1.0 - detail::kPersistenceMargin;
  const double s = gate.lambda_max * (s_capped ? 1.0 - detail::kPersistenceMargin : ss);
  // the floor and cap are flat, so they pass no gradient
  if (softplus(gate.u_omega) > detail::kOmegaFloor) g.u_omega += t.omega * sw;
  if (!s_capped)
    g.u_s += (t.alpha * sa + t.beta * (1.0 - sa)) * gate.lambda_max * ss * (1.0 - ss);
  g.u_a += (t.alpha - t.beta) * s * sa * (1.0 - sa);
}

const std::vector<Eigen::MatrixXd>& masks_for(const Batch& batch, std::size_t i) {
  static const std::vector<Eigen::MatrixXd> none;
  return batch.masks.empty() ? none : batch.masks[i];
}

}  // namespace

double batch_loss(const Network& net, const Batch& batch) {
  if (batch.samples.empty()) throw std::invalid_argument("batch_loss: empty batch");
  double loss = 0;
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    const auto tr = stack_forward(net, *batch.samples[i], masks_for(batch, i));
    const double e = tr.sigma_hat - batch.samples[i]->target;
    loss += e * e;
  }
  return loss / static_cast<double>(batch.samples.size());
}

BatchGradient bptt_gradients(const Network& net, const Batch& batch) {
  if (batch.samples.empty()) throw std::invalid_argument("bptt_gradients: empty batch");
  if (!batch.masks.empty() && batch.masks.size() != batch.samples.size())
    throw std::invalid_argument("bptt_gradients: one mask set per sample required");
  BatchGradient out;
  out.grads = Parameters::zeros(net.shape);
  TripleGrad triple;
  const auto B = static_cast<double>(batch.samples.size());
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    const auto tr = stack_forward(net, *batch.samples[i], masks_for(batch, i));
    const double e = tr.sigma_hat - batch.samples[i]->target;
    if (!std::isfinite(e)) throw DivergenceError("non-finite prediction in batch");
    out.loss += e * e / B;
    backward_sample(net, tr, 2.0 * e / B, out.grads, triple);
  }
  if (uses_garch(net.shape.kind)) add_triple_to_raw(net.params.gate, triple, out.grads.gate);
  for (const auto& view : parameter_views(out.grads, net.shape))
    for (double v : view.values)
      if (!std::isfinite(v)) throw DivergenceError("non-finite gradient for " + view.name);
  return out;
}

Parameters finite_diff_oracle(const Network& net, const Batch& batch, double step) {
  if (!(step > 0)) throw std::invalid_argument("finite_diff_oracle: step must be positive");
  Network probe = net;
  Parameters out = Parameters::zeros(net.shape);
  auto params = parameter_views(probe.params, probe.shape);
  auto grads = parameter_views(out, net.shape);
  for (std::size_t v = 0; v < params.size(); ++v) {
    for (std::size_t k = 0; k < params[v].values.size(); ++k) {
      double& x = params[v].values[k];
      const double orig = x;
      x = orig + step;
      const double fp = batch_loss(probe, batch);
      x = orig - step;
      const double fm = batch_loss(probe, batch);
      x = orig;
      grads[v].values[k] = (fp - fm) / (2 * step);
    }
  }
  return out;
}

double central_difference(const std::function<double(double)>& f, double x, double step) {
  if (!(step > 0)) throw std::invalid_argument("central_difference: step must be positive");
  return (f(x + step) - f(x - step)) / (2 * step);
}

}  // namespace garchrnn
