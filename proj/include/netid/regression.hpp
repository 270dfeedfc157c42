#pragma once

#include <Eigen/Dense>
#include <vector>

#include "netid/network.hpp"

namespace netid {

// One-node identification problem: estimate the module from node i to node j
// with numerator/denominator orders (n_b, n_f), modelling the impulse
// responses of the self filter and of the modules from `gp_inputs` as
// length-l Gaussian processes. For the parametric method gp_inputs excludes
// i; for the fully nonparametric one it includes it.
struct MISOSetup {
  int j = 0;
  int i = 0;
  std::vector<int> gp_inputs;  // nodes k whose filters get a GP block
  int n_b = 1;
  int n_f = 0;
  int l = 1;
  // Leading samples excluded from the regression rows (they stay available
  // as regressor history). The length-l filter blocks assume l samples of
  // past data; rows before that carry a startup error that grows with the
  // filter memory, so conditioning on them matters whenever l is a sizable
  // fraction of N. Negative = automatic (min(l, N/2)); 0 keeps every row.
  int skip = -1;

  int n_theta() const { return n_b + n_f; }
  // GP block order: the self filter first, then gp_inputs in given order.
  int blocks() const { return 1 + static_cast<int>(gp_inputs.size()); }
};

// Lower-triangular Toeplitz block of a signal: column c (1-based) holds the
// signal delayed by delay + c - 1 samples, scaled by sign.
Eigen::MatrixXd toeplitz(const Eigen::VectorXd& signal, int cols, int delay,
                         double sign);

// 2N x n_theta selector with unit entries placing theta_B into rows 1..n_b
// and theta_F into rows N+1..N+n_f of the stacked coefficient vector
// [b_ji; f_ji] (both zero-padded to length N).
Eigen::MatrixXd selector_matrix(int N, int n_b, int n_f);

// Regression quantities of the rewritten node equation
//   w_j = W~ m_j + sum_k W_k m_k + W_ji g_ji + noise,
// where W~ = W_j + G_b W~_i - G_f W~_j couples the self filter block to
// theta. X stacks the blocks at theta = 0; W is X with the theta coupling
// applied to the first block.
struct StackedData {
  MISOSetup setup;
  int N = 0;     // regression rows kept (record length minus skip)
  int skip = 0;  // resolved number of leading samples conditioned on
  Eigen::VectorXd theta;        // the theta W was built at
  Eigen::VectorXd wj, wi;       // kept rows only
  Eigen::VectorXd wj_all, wi_all;  // full records (regressor history)
  Eigen::MatrixXd X;          // N x blocks*l, theta-independent
  Eigen::MatrixXd Wt_i;       // N x l, entry (t, c) = -w_i(t+skip - c - 2)
  Eigen::MatrixXd Wt_j;       // N x l, entry (t, c) = -w_j(t+skip - c - 2)
  // Exact shifted copies S_{u-1} W~: entry (t, c) = -w(t+skip - c - u - 1).
  // Shifting rows inside the kept window would zero-fill the top rows even
  // though those samples exist, so the shifts are rebuilt from the records.
  std::vector<Eigen::MatrixXd> Wt_i_s;  // u = 1..n_b
  std::vector<Eigen::MatrixXd> Wt_j_s;  // v = 1..max(n_f, 1)
  Eigen::MatrixXd W;          // N x blocks*l

  int bl() const { return setup.blocks() * setup.l; }

  // W_ji * (selector * theta): the target-module regression term
  // B(q) w_i - Fbar(q) w_j evaluated for the given coefficient vector.
  Eigen::VectorXd wji_times(const Eigen::VectorXd& th) const;
  // Column of W_ji * selector for one active coordinate (0-based; b
  // coordinates first, then f).
  Eigen::VectorXd wji_col(int coord) const;
  // Column of Y_hat * selector for one active coordinate, where Y_hat g is
  // the filtered combination M(q)[b-part: -w_i, f-part: +w_j] delayed twice
  // and m is the self-block posterior mean (truncated/padded to length N).
  Eigen::VectorXd yhat_col(const Eigen::VectorXd& m_self, int coord) const;
};

StackedData build_stacked(const DataRecord& data, const MISOSetup& setup,
                          const Eigen::VectorXd& theta);
// Refresh W (and theta) in place for a new theta; X and the W~ blocks are
// unchanged.
void rebuild_theta(StackedData& sd, const Eigen::VectorXd& theta);

}  // namespace netid
