#include "netid/nonparam.hpp"

#include <algorithm>

#include "netid/errors.hpp"

namespace netid {

std::vector<double> recover_module_ir(const std::vector<double>& m_self,
                                      const std::vector<double>& m_input,
                                      int taps) {
  if (taps < 1) throw Error("impulse response length must be >= 1");
  // M_jk = (1 - M_j) G and both M_jk, G are strictly proper, so
  // g(n) = m_input(n) + sum_c m_self(c) g(n - c).
  std::vector<double> g(static_cast<size_t>(taps), 0.0);
  const int ls = static_cast<int>(m_self.size());
  const int lk = static_cast<int>(m_input.size());
  for (int n = 1; n < taps; ++n) {
    double acc = (n <= lk) ? m_input[n - 1] : 0.0;
    for (int c = 1; c <= ls && c < n; ++c) acc += m_self[c - 1] * g[n - c];
    g[n] = acc;
  }
  return g;
}

NonparamResult identify_nonparametric(const DataRecord& data, int j,
                                      const std::vector<int>& inputs, int l,
                                      const NonparamOptions& opts) {
  if (inputs.empty()) throw Error("nonparametric setup needs inputs");
  for (int k : inputs)
    if (k == j) throw Error("the output node cannot be its own input");

  // Same stacked regression as the parametric method with theta pinned at
  // zero: W = X and the innovation target is w_j itself.
  MISOSetup setup;
  setup.j = j;
  setup.i = j;
  setup.gp_inputs = inputs;
  setup.n_b = 1;
  setup.n_f = 0;
  setup.l = l;
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(1);
  StackedData sd = build_stacked(data, setup, theta0);

  const Eigen::VectorXd wj = sd.wj;
  const double var_wj =
      (wj.array() - wj.mean()).square().sum() / std::max(1, sd.N - 1);
  if (!(var_wj > 0.0)) throw Error("output node signal is constant");

  // Same starting scales as the parametric path: predictor impulse responses
  // are O(1) whatever the signal scale, and a long starting memory (beta near
  // 1) can lock the decay update into a poor stationary point.
  Eta eta;
  eta.theta = theta0;
  eta.lambda = Eigen::VectorXd::Constant(setup.blocks(), 0.1);
  eta.beta = Eigen::VectorXd::Constant(setup.blocks(), 0.5);
  eta.sigma2 = 0.1 * var_wj;

  NonparamResult res;
  res.j = j;
  res.inputs = inputs;
  res.trace.termination = "max_iterations";
  Eigen::VectorXd prev = eta.stacked();
  PosteriorMoments post;
  for (int n = 0; n < opts.max_iter; ++n) {
    post = e_step(sd, eta);
    res.trace.nll.push_back(marginal_nll(sd, eta));
    for (int b = 0; b < setup.blocks(); ++b) {
      const auto [lam, bet] = update_hyperparams(
          post.M_hat.block(b * l, b * l, l, l), opts.beta_min, opts.beta_max);
      eta.lambda(b) = lam;
      eta.beta(b) = bet;
    }
    eta.sigma2 = update_sigma(sd, post);

    const Eigen::VectorXd cur = eta.stacked();
    const double rel = (cur - prev).norm() / prev.norm();
    res.trace.rel_change.push_back(rel);
    prev = cur;
    res.trace.iterations = n + 1;
    if (rel < opts.tol) {
      res.trace.termination = "converged";
      break;
    }
  }
  res.trace.nll.push_back(marginal_nll(sd, eta));

  post = e_step(sd, eta);
  res.lambda = eta.lambda;
  res.beta = eta.beta;
  res.sigma2 = eta.sigma2;
  const std::vector<double> m_self(post.m_hat.data(), post.m_hat.data() + l);
  for (int b = 0; b < setup.blocks(); ++b) {
    const Eigen::VectorXd mb = post.m_hat.segment(b * l, l);
    res.gp_ir.emplace_back(mb.data(), mb.data() + mb.size());
  }
  for (size_t b = 0; b < inputs.size(); ++b)
    res.recovered.emplace(
        inputs[b],
        recover_module_ir(m_self, res.gp_ir[b + 1], opts.ir_taps));
  return res;
}

}  // namespace netid
