#include "netid/regression.hpp"

#include <algorithm>

#include "netid/errors.hpp"

namespace netid {

Eigen::MatrixXd toeplitz(const Eigen::VectorXd& signal, int cols, int delay,
                         double sign) {
  if (cols < 1 || delay < 0) throw Error("bad Toeplitz block shape");
  const int N = static_cast<int>(signal.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, cols);
  for (int c = 0; c < cols; ++c) {
    const int shift = delay + c;  // column c holds signal(t - shift)
    for (int t = shift; t < N; ++t) M(t, c) = sign * signal(t - shift);
  }
  return M;
}

Eigen::MatrixXd selector_matrix(int N, int n_b, int n_f) {
  if (n_b > N || n_f > N) throw Error("selector orders exceed sample count");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * N, n_b + n_f);
  for (int u = 0; u < n_b; ++u) M(u, u) = 1.0;
  for (int v = 0; v < n_f; ++v) M(N + v, n_b + v) = 1.0;
  return M;
}

namespace {

void check_setup(const DataRecord& data, const MISOSetup& s) {
  const int L = static_cast<int>(data.w.cols());
  if (s.j < 1 || s.j > L || s.i < 1 || s.i > L)
    throw Error("node index out of range");
  for (int k : s.gp_inputs)
    if (k < 1 || k > L) throw Error("node index out of range");
  if (s.n_b < 1 || s.n_f < 0) throw Error("module orders must have n_b >= 1");
  if (s.l < 1) throw Error("kernel length must be >= 1");
  if (data.w.rows() != data.N || data.N < 1) throw Error("empty data record");
}

// W = X with the first (self) block coupled to theta:
// block_1 = W_j + sum_u thetaB(u) S_{u-1} W~_i - sum_v thetaF(v) S_{v-1} W~_j.
// The shifted blocks are materialized from the full records, so no row of the
// kept window is zero-padded.
void apply_theta(StackedData& sd) {
  const auto& s = sd.setup;
  sd.W = sd.X;
  auto first = sd.W.leftCols(s.l);
  for (int u = 1; u <= s.n_b; ++u) first += sd.theta(u - 1) * sd.Wt_i_s[u - 1];
  for (int v = 1; v <= s.n_f; ++v)
    first -= sd.theta(s.n_b + v - 1) * sd.Wt_j_s[v - 1];
}

// out(t) += c * signal(skip + t - lag) wherever the index is in range.
void add_lagged(Eigen::VectorXd& out, const Eigen::VectorXd& signal, int skip,
                int lag, double c) {
  const int N = static_cast<int>(out.size());
  if (skip >= lag) {
    out += c * signal.segment(skip - lag, N);
  } else {
    const int pad = lag - skip;  // rows with pre-record (zero) history
    out.tail(N - pad) += c * signal.head(N - pad);
  }
}

}  // namespace

Eigen::VectorXd StackedData::wji_times(const Eigen::VectorXd& th) const {
  if (th.size() != setup.n_theta()) throw Error("theta size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
  for (int u = 1; u <= setup.n_b; ++u)
    add_lagged(out, wi_all, skip, u, th(u - 1));
  for (int v = 1; v <= setup.n_f; ++v)
    add_lagged(out, wj_all, skip, v, -th(setup.n_b + v - 1));
  return out;
}

Eigen::VectorXd StackedData::wji_col(int coord) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
  if (coord < setup.n_b)
    add_lagged(out, wi_all, skip, coord + 1, 1.0);
  else
    add_lagged(out, wj_all, skip, coord - setup.n_b + 1, -1.0);
  return out;
}

Eigen::VectorXd StackedData::yhat_col(const Eigen::VectorXd& m_self,
                                      int coord) const {
  if (m_self.size() != setup.l) throw Error("self block size mismatch");
  const bool b_part = coord < setup.n_b;
  const int s = b_part ? coord : coord - setup.n_b;
  Eigen::VectorXd out = (b_part ? Wt_i_s[s] : Wt_j_s[s]) * m_self;
  return b_part ? out : Eigen::VectorXd(-out);
}

StackedData build_stacked(const DataRecord& data, const MISOSetup& setup,
                          const Eigen::VectorXd& theta) {
  check_setup(data, setup);
  if (theta.size() != setup.n_theta()) throw Error("theta size mismatch");

  // Rows conditioned on: their lagged entries stay in the regressors, they
  // just contribute no residuals. Kept rows then see (almost) fully observed
  // history instead of the zero padding of the leading Toeplitz rows.
  const int sk = setup.skip >= 0 ? std::min(setup.skip, data.N - 1)
                                 : std::min(setup.l, data.N / 2);

  StackedData sd;
  sd.setup = setup;
  sd.skip = sk;
  sd.N = data.N - sk;
  sd.theta = theta;
  sd.wj_all = data.w.col(setup.j - 1);
  sd.wi_all = data.w.col(setup.i - 1);
  sd.wj = sd.wj_all.tail(sd.N);
  sd.wi = sd.wi_all.tail(sd.N);

  sd.X.resize(sd.N, setup.blocks() * setup.l);
  sd.X.leftCols(setup.l) = toeplitz(sd.wj_all, setup.l, 1, 1.0).bottomRows(sd.N);
  for (size_t b = 0; b < setup.gp_inputs.size(); ++b)
    sd.X.middleCols((b + 1) * setup.l, setup.l) =
        toeplitz(data.w.col(setup.gp_inputs[b] - 1), setup.l, 1, 1.0)
            .bottomRows(sd.N);

  sd.Wt_i_s.reserve(setup.n_b);
  for (int u = 1; u <= setup.n_b; ++u)
    sd.Wt_i_s.push_back(toeplitz(sd.wi_all, setup.l, u + 1, -1.0).bottomRows(sd.N));
  sd.Wt_j_s.reserve(std::max(setup.n_f, 1));
  for (int v = 1; v <= std::max(setup.n_f, 1); ++v)
    sd.Wt_j_s.push_back(toeplitz(sd.wj_all, setup.l, v + 1, -1.0).bottomRows(sd.N));
  sd.Wt_i = sd.Wt_i_s[0];
  sd.Wt_j = sd.Wt_j_s[0];
  apply_theta(sd);
  return sd;
}

void rebuild_theta(StackedData& sd, const Eigen::VectorXd& theta) {
  if (theta.size() != sd.setup.n_theta()) throw Error("theta size mismatch");
  sd.theta = theta;
  apply_theta(sd);
}

}  // namespace netid
