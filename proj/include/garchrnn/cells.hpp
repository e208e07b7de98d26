// SPDX-License-Identifier: Apache-2.0
#pragma once

// Recurrent cells: GRU, LSTM, and their GARCH-gated variants, plus the
// softplus-sqrt volatility head.
//
// Gate blocks are stacked row-wise in a single W/U/b triple per cell:
//   GRU : [z; r; h]        LSTM : [f; i; o; c]
// so W is (gates * hidden) x input, U is (gates * hidden) x hidden.

#include <Eigen/Dense>
#include <random>

namespace garchrnn {

template <int Gates>
struct GatedWeights {
  static constexpr int gate_count = Gates;

  Eigen::MatrixXd W;
  Eigen::MatrixXd U;
  Eigen::VectorXd b;

  static GatedWeights zeros(int input_dim, int hidden_dim) {
    GatedWeights g;
    g.W = Eigen::MatrixXd::Zero(Gates * hidden_dim, input_dim);
    g.U = Eigen::MatrixXd::Zero(Gates * hidden_dim, hidden_dim);
    g.b = Eigen::VectorXd::Zero(Gates * hidden_dim);
    return g;
  }

  int hidden_dim() const { return static_cast<int>(U.cols()); }
  int input_dim() const { return static_cast<int>(W.cols()); }

  auto W_gate(int gate) { return W.middleRows(gate * hidden_dim(), hidden_dim()); }
  auto U_gate(int gate) { return U.middleRows(gate * hidden_dim(), hidden_dim()); }
  auto b_gate(int gate) { return b.segment(gate * hidden_dim(), hidden_dim()); }
  auto W_gate(int gate) const { return W.middleRows(gate * hidden_dim(), hidden_dim()); }
  auto U_gate(int gate) const { return U.middleRows(gate * hidden_dim(), hidden_dim()); }
  auto b_gate(int gate) const { return b.segment(gate * hidden_dim(), hidden_dim()); }

  /// Throws std::invalid_argument unless all blocks agree on dimensions.
  void check_shapes() const;
};

struct GruParams : GatedWeights<3> {
  enum Gate { z = 0, r = 1, h = 2 };
  GruParams() = default;
  GruParams(GatedWeights<3> w) : GatedWeights<3>(std::move(w)) {}
  static GruParams zeros(int input_dim, int hidden_dim) {
    return GatedWeights<3>::zeros(input_dim, hidden_dim);
  }
};

struct LstmParams : GatedWeights<4> {
  enum Gate { f = 0, i = 1, o = 2, c = 3 };
  LstmParams() = default;
  LstmParams(GatedWeights<4> w) : GatedWeights<4>(std::move(w)) {}
  static LstmParams zeros(int input_dim, int hidden_dim) {
    return GatedWeights<4>::zeros(input_dim, hidden_dim);
  }
};

struct GarchTriple {
  double omega = 0;
  double alpha = 0;
  double beta = 0;
};

/// Embedded GARCH(1,1) recursion projected onto the hidden dimension.
struct GarchGateParams {
  double u_omega = 0;
  double u_s = 0;
  double u_a = 0;
  Eigen::VectorXd W_g;
  Eigen::VectorXd b_g;
  double coupling = 0;  // gamma for GARCH-GRU, w for GARCH-LSTM
  double lambda_max = 0.97;

  GarchTriple constrained() const;
};

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;  // LSTM variants only
  double eps2_prev = 0;
  double sigma2_prev = 1;
};

/// omega = softplus(u_omega); s = lambda_max * sigmoid(u_s);
/// alpha = s * sigmoid(u_a); beta = s * (1 - sigmoid(u_a)).
GarchTriple constrain_garch(double u_omega, double u_s, double u_a, double lambda_max);

Eigen::VectorXd gru_forward(const GruParams& p, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& h_prev);

/// Returns (h_t, c_t).
std::pair<Eigen::VectorXd, Eigen::VectorXd> lstm_forward(const LstmParams& p,
                                                         const Eigen::VectorXd& x,
                                                         const Eigen::VectorXd& h_prev,
                                                         const Eigen::VectorXd& c_prev);

struct GateOutput {
  Eigen::VectorXd g;
  double sigma2 = 0;
};

GateOutput garch_gate(const GarchGateParams& gate, double eps2_prev, double sigma2_prev);

struct GarchCellOutput {
  Eigen::VectorXd h;
  /// h-hat (GARCH-GRU) or h-tilde (GARCH-LSTM): the recurrent output before
  /// the GARCH coupling is applied.
  Eigen::VectorXd pre_coupling;
  Eigen::VectorXd g;
  CellState state;  // carries h, c and the advanced variance recursion
};

/// `eps_t` is the current data innovation r_t - mu; it becomes the next
/// step's eps2_prev.
GarchCellOutput garch_gru_cell(const GruParams& p, const GarchGateParams& gate,
                               const Eigen::VectorXd& x, double eps_t,
                               const CellState& state);

GarchCellOutput garch_lstm_cell(const LstmParams& p, const GarchGateParams& gate,
                                const Eigen::VectorXd& x, double eps_t,
                                const CellState& state);

/// sqrt(softplus(W_out . h + b_out)), strictly positive.
double volatility_head(const Eigen::VectorXd& h, const Eigen::VectorXd& W_out, double b_out);

}  // namespace garchrnn
