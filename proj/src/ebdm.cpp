#include "netid/ebdm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "netid/errors.hpp"
#include "netid/kernel.hpp"
#include "netid/poly.hpp"
#include "netid/rng.hpp"

namespace netid {

Eigen::VectorXd Eta::stacked() const {
  Eigen::VectorXd v(theta.size() + lambda.size() + beta.size() + 1);
  v << theta, lambda, beta, sigma2;
  return v;
}

namespace {

void check_eta(const StackedData& sd, const Eta& eta) {
  const int blocks = sd.setup.blocks();
  if (eta.lambda.size() != blocks || eta.beta.size() != blocks)
    throw Error("hyperparameter count does not match the GP block count");
  if (eta.theta.size() != sd.setup.n_theta())
    throw Error("theta size mismatch");
  if (!(eta.sigma2 > 0.0))
    throw NonpositiveVariance("innovation variance must be positive");
}

// U = W * blockdiag(kernel square roots); the workhorse of both the E-step
// and the marginal cost.
Eigen::MatrixXd scaled_regressors(const StackedData& sd, const Eta& eta,
                                  std::vector<Eigen::MatrixXd>* sqrts) {
  const int l = sd.setup.l;
  Eigen::MatrixXd U(sd.N, sd.bl());
  for (int b = 0; b < sd.setup.blocks(); ++b) {
    Eigen::MatrixXd Sk = kernel_sqrt(eta.beta(b), eta.lambda(b), l);
    U.middleCols(b * l, l) = sd.W.middleCols(b * l, l) * Sk;
    if (sqrts) sqrts->push_back(std::move(Sk));
  }
  return U;
}

// Cholesky with a single jitter retry, as used everywhere a posterior or
// marginal covariance is factorized.
Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(Eigen::MatrixXd A,
                                             const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * A.trace() / static_cast<double>(A.rows());
  A.diagonal().array() += jitter;
  llt.compute(A);
  if (llt.info() != Eigen::Success)
    throw IllConditioned(std::string(what) + ": Cholesky failed");
  return llt;
}

}  // namespace

PosteriorMoments e_step(const StackedData& sd, const Eta& eta) {
  check_eta(sd, eta);
  const int l = sd.setup.l;
  const int bl = sd.bl();

  std::vector<Eigen::MatrixXd> sqrts;
  const Eigen::MatrixXd U = scaled_regressors(sd, eta, &sqrts);
  const Eigen::VectorXd z = sd.wj - sd.wji_times(sd.theta);

  Eigen::MatrixXd S = U.transpose() * U / eta.sigma2;
  S.diagonal().array() += 1.0;
  const auto llt = chol_with_jitter(std::move(S), "posterior");

  PosteriorMoments post;
  const Eigen::VectorXd y =
      llt.solve(U.transpose() * z) / eta.sigma2;  // S^{-1} U^T z / sigma2
  post.m_hat.resize(bl);
  for (int b = 0; b < sd.setup.blocks(); ++b)
    post.m_hat.segment(b * l, l) = sqrts[b] * y.segment(b * l, l);

  const Eigen::MatrixXd Sinv =
      llt.solve(Eigen::MatrixXd::Identity(bl, bl));
  post.P_m.resize(bl, bl);
  for (int a = 0; a < sd.setup.blocks(); ++a)
    for (int b = 0; b < sd.setup.blocks(); ++b)
      post.P_m.block(a * l, b * l, l, l) =
          sqrts[a] * Sinv.block(a * l, b * l, l, l) * sqrts[b].transpose();
  post.P_m = 0.5 * (post.P_m + post.P_m.transpose()).eval();
  post.M_hat = post.P_m + post.m_hat * post.m_hat.transpose();

  const auto& Lm = llt.matrixLLT();
  const double dmin = Lm.diagonal().minCoeff();
  const double dmax = Lm.diagonal().maxCoeff();
  post.rcond = (dmax > 0.0) ? (dmin / dmax) * (dmin / dmax) : 0.0;
  return post;
}

double marginal_nll(const StackedData& sd, const Eta& eta) {
  check_eta(sd, eta);
  const Eigen::MatrixXd U = scaled_regressors(sd, eta, nullptr);
  const Eigen::VectorXd z = sd.wj - sd.wji_times(sd.theta);
  const int N = sd.N;

  if (sd.bl() < N) {
    Eigen::MatrixXd S = U.transpose() * U / eta.sigma2;
    S.diagonal().array() += 1.0;
    const auto llt = chol_with_jitter(std::move(S), "marginal");
    const double logdet_S =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Eigen::VectorXd u = U.transpose() * z;
    const double quad =
        (z.squaredNorm() - u.dot(llt.solve(u)) / eta.sigma2) / eta.sigma2;
    return N * std::log(eta.sigma2) + logdet_S + quad;
  }

  Eigen::MatrixXd P = U * U.transpose();
  P.diagonal().array() += eta.sigma2;
  const auto llt = chol_with_jitter(std::move(P), "marginal");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return logdet + z.dot(llt.solve(z));
}

std::pair<double, double> update_hyperparams(const Eigen::MatrixXd& M_block,
                                             double beta_min,
                                             double beta_max) {
  const int l = static_cast<int>(M_block.rows());
  if (M_block.cols() != l) throw Error("GP block must be square");
  if (!(beta_min > 0.0 && beta_max < 1.0 && beta_min < beta_max))
    throw Error("bad decay search interval");
  const Eigen::VectorXd diag = M_block.diagonal();
  const Eigen::VectorXd super =
      l > 1 ? Eigen::VectorXd(M_block.diagonal(1)) : Eigen::VectorXd(0);

  auto cost = [&](double beta) -> double {
    const long double tr = kernel_inv_trace_unit(beta, diag, super);
    if (tr <= 0.0L) return -std::numeric_limits<double>::infinity();
    return kernel_logdet_unit(beta, l) +
           l * static_cast<double>(logl(tr));
  };

  // Coarse grid covering both edges (log-spaced in beta and in 1 - beta),
  // then a golden-section refinement of the best bracket.
  std::vector<double> grid;
  for (int m = 0; m < 25; ++m) {
    const double t = m / 24.0;
    grid.push_back(beta_min * std::pow(0.9 / beta_min, t));
    grid.push_back(1.0 - 0.1 * std::pow((1.0 - beta_max) / 0.1, t));
  }
  std::sort(grid.begin(), grid.end());
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (size_t m = 0; m < grid.size(); ++m) {
    const double c = cost(grid[m]);
    if (c < best_cost) {
      best_cost = c;
      best = static_cast<int>(m);
    }
  }
  double lo = grid[std::max(best - 1, 0)];
  double hi = grid[std::min<size_t>(best + 1, grid.size() - 1)];

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = cost(x1), f2 = cost(x2);
  while (hi - lo > 1e-10 * std::max(1.0, std::abs(hi))) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = cost(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = cost(x2);
    }
  }
  double beta_hat = 0.5 * (lo + hi);
  if (cost(grid[best]) < cost(beta_hat)) beta_hat = grid[best];

  const long double tr = kernel_inv_trace_unit(beta_hat, diag, super);
  const double lambda_hat = static_cast<double>(tr / l);
  if (!std::isfinite(lambda_hat))
    throw IllConditioned("kernel scale update overflowed");
  return {lambda_hat, beta_hat};
}

Eigen::VectorXd update_theta(const StackedData& sd,
                             const PosteriorMoments& post) {
  const auto& s = sd.setup;
  const int l = s.l, nb = s.n_b, nf = s.n_f, nth = s.n_theta(), N = sd.N;

  const Eigen::MatrixXd Mj = post.M_hat.topLeftCorner(l, l);
  const Eigen::VectorXd m_self = post.m_hat.head(l);
  // Second-moment products of the shifted self-block regressors; traces
  // against them reduce to elementwise sums because Mj is symmetric.
  std::vector<Eigen::MatrixXd> BiM(nb), BjM(nf);
  for (int u = 0; u < nb; ++u) BiM[u] = sd.Wt_i_s[u] * Mj;
  for (int v = 0; v < nf; ++v) BjM[v] = sd.Wt_j_s[v] * Mj;
  const Eigen::MatrixXd HX = sd.X * post.M_hat.leftCols(l);
  const Eigen::VectorXd Xm = sd.X * post.m_hat;

  // Quadratic part from the GP-coupled self block.
  Eigen::MatrixXd Hq = Eigen::MatrixXd::Zero(nth, nth);
  for (int u = 0; u < nb; ++u)
    for (int v = 0; v < nb; ++v)
      Hq(u, v) = sd.Wt_i_s[u].cwiseProduct(BiM[v]).sum();
  for (int u = 0; u < nf; ++u)
    for (int v = 0; v < nf; ++v)
      Hq(nb + u, nb + v) = sd.Wt_j_s[u].cwiseProduct(BjM[v]).sum();
  for (int u = 0; u < nb; ++u)
    for (int v = 0; v < nf; ++v) {
      const double q = -sd.Wt_i_s[u].cwiseProduct(BjM[v]).sum();
      Hq(u, nb + v) += q;
      Hq(nb + v, u) += q;
    }

  Eigen::MatrixXd WjiM(N, nth), YM(N, nth);
  for (int r = 0; r < nth; ++r) {
    WjiM.col(r) = sd.wji_col(r);
    YM.col(r) = sd.yhat_col(m_self, r);
  }
  const Eigen::MatrixXd C = WjiM.transpose() * YM;
  Hq += WjiM.transpose() * WjiM + C + C.transpose();
  Hq = 0.5 * (Hq + Hq.transpose()).eval();

  Eigen::VectorXd rhs = WjiM.transpose() * (sd.wj - Xm) + YM.transpose() * sd.wj;
  for (int u = 0; u < nb; ++u)
    rhs(u) -= HX.cwiseProduct(sd.Wt_i_s[u]).sum();
  for (int v = 0; v < nf; ++v)
    rhs(nb + v) += HX.cwiseProduct(sd.Wt_j_s[v]).sum();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(Hq);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularNormalEquations("theta normal equations not positive");
  const Eigen::VectorXd theta = ldlt.solve(rhs);
  if ((Hq * theta - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm()))
    throw SingularNormalEquations("theta normal equations nearly singular");
  return theta;
}

double update_sigma(const StackedData& sd, const PosteriorMoments& post) {
  const Eigen::VectorXd z = sd.wj - sd.wji_times(sd.theta);
  const Eigen::VectorXd resid = z - sd.W * post.m_hat;
  const Eigen::MatrixXd gram = sd.W.transpose() * sd.W;
  const double tr = gram.cwiseProduct(post.P_m).sum();
  const double s2 = (resid.squaredNorm() + tr) / sd.N;
  if (!(s2 > 0.0) || !std::isfinite(s2))
    throw NonpositiveVariance("innovation variance update broke down");
  return s2;
}

double q_objective(const StackedData& sd, const PosteriorMoments& post,
                   const Eta& eta) {
  check_eta(sd, eta);
  StackedData sdc = sd;
  rebuild_theta(sdc, eta.theta);
  const Eigen::VectorXd z = sdc.wj - sdc.wji_times(eta.theta);
  const Eigen::VectorXd resid = z - sdc.W * post.m_hat;
  const Eigen::MatrixXd gram = sdc.W.transpose() * sdc.W;
  const double es = resid.squaredNorm() + gram.cwiseProduct(post.P_m).sum();
  double q = -0.5 * (sd.N * std::log(eta.sigma2) + es / eta.sigma2);

  const int l = sd.setup.l;
  for (int b = 0; b < sd.setup.blocks(); ++b) {
    const Eigen::MatrixXd Mb = post.M_hat.block(b * l, b * l, l, l);
    const long double tr =
        kernel_inv_trace_unit(eta.beta(b), Mb.diagonal(),
                              l > 1 ? Eigen::VectorXd(Mb.diagonal(1))
                                    : Eigen::VectorXd(0));
    q -= 0.5 * (l * std::log(eta.lambda(b)) +
                kernel_logdet_unit(eta.beta(b), l) +
                static_cast<double>(tr / eta.lambda(b)));
  }
  return q;
}

Eigen::VectorXd arx_init(const DataRecord& data, const MISOSetup& setup) {
  const Eigen::VectorXd wj = data.w.col(setup.j - 1);
  const Eigen::VectorXd wi = data.w.col(setup.i - 1);
  const int maxlag = std::max(setup.n_b, setup.n_f);
  const int rows = data.N - maxlag;
  if (rows < setup.n_theta())
    throw Error("not enough samples for the least-squares start");
  Eigen::MatrixXd Phi(rows, setup.n_theta());
  for (int u = 1; u <= setup.n_b; ++u)
    Phi.col(u - 1) = wi.segment(maxlag - u, rows);
  for (int v = 1; v <= setup.n_f; ++v)
    Phi.col(setup.n_b + v - 1) = -wj.segment(maxlag - v, rows);
  return Phi.colPivHouseholderQr().solve(wj.tail(rows));
}

std::vector<Eigen::VectorXd> default_theta_starts(const DataRecord& data,
                                                  const MISOSetup& setup) {
  std::vector<Eigen::VectorXd> starts;
  try {
    starts.push_back(arx_init(data, setup));
  } catch (const Error&) {
    // record too short for the least-squares start; the zero start remains
  }
  starts.push_back(Eigen::VectorXd::Zero(setup.n_theta()));
  if (setup.n_f == 0) return starts;

  // Lattice over the leading two denominator coefficients. f1 spans
  // [-1.8, 1.8] and f2 reaches 1.2, so second-order denominators are covered
  // beyond the stability triangle (|f2| < 1, |f1| < 1 + f2).
  static constexpr double kF1[] = {-1.8, -0.9, 0.0, 0.9, 1.8};
  static constexpr double kF2[] = {-0.6, 0.0, 0.6, 1.2};
  std::vector<Eigen::VectorXd> fpts;
  for (double f1 : kF1) {
    if (setup.n_f == 1) {
      fpts.push_back(Eigen::VectorXd::Constant(1, f1));
      continue;
    }
    for (double f2 : kF2) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(setup.n_f);
      f(0) = f1;
      f(1) = f2;
      fpts.push_back(std::move(f));
    }
  }

  // Numerator refit per lattice point: regress the denominator-filtered
  // output on lagged target input, with lags of the other inputs soaking up
  // the nuisance paths. One decomposition serves every lattice point.
  int nx = 10;
  const int gp_count = static_cast<int>(setup.gp_inputs.size());
  auto design_rows = [&](int lags) {
    return data.N - std::max({setup.n_b, setup.n_f, lags});
  };
  while (nx > 0 &&
         design_rows(nx) < setup.n_b + nx * gp_count + 8)
    --nx;
  const int maxlag = std::max({setup.n_b, setup.n_f, nx});
  const int rows = data.N - maxlag;
  const int cols = setup.n_b + nx * gp_count;
  if (rows < cols + setup.n_f) {
    // Too short even without nuisance lags: lattice points keep the
    // least-squares numerator if one exists, otherwise zeros.
    Eigen::VectorXd b0 = Eigen::VectorXd::Zero(setup.n_b);
    b0(0) = 1.0;
    for (const auto& f : fpts) {
      Eigen::VectorXd th(setup.n_theta());
      th << b0, f;
      starts.push_back(std::move(th));
    }
    return starts;
  }

  const Eigen::VectorXd wj = data.w.col(setup.j - 1);
  const Eigen::VectorXd wi = data.w.col(setup.i - 1);
  Eigen::MatrixXd Phi(rows, cols);
  for (int u = 1; u <= setup.n_b; ++u)
    Phi.col(u - 1) = wi.segment(maxlag - u, rows);
  int c = setup.n_b;
  for (int k : setup.gp_inputs) {
    const Eigen::VectorXd wk = data.w.col(k - 1);
    for (int t = 1; t <= nx; ++t) Phi.col(c++) = wk.segment(maxlag - t, rows);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);

  // Two numerator variants per lattice point: the least-squares refit, and a
  // unit impulse. The refit tracks the numerator scale but inherits feedback
  // bias (the regression error contains the other nodes' responses to w_j);
  // the unit impulse is unbiased about shape but fixes the scale at one.
  for (const auto& f : fpts) {
    Eigen::VectorXd y = wj.tail(rows);
    for (int v = 1; v <= setup.n_f; ++v)
      y += f(v - 1) * wj.segment(maxlag - v, rows);
    const Eigen::VectorXd sol = qr.solve(y);
    Eigen::VectorXd th(setup.n_theta());
    th << sol.head(setup.n_b), f;
    starts.push_back(std::move(th));

    Eigen::VectorXd th_unit = Eigen::VectorXd::Zero(setup.n_theta());
    th_unit(0) = 1.0;
    th_unit.tail(setup.n_f) = f;
    starts.push_back(std::move(th_unit));
  }
  return starts;
}

namespace {

struct EmRun {
  Eta eta;
  EMTrace trace;

  double final_nll() const {
    return trace.nll.empty() ? std::numeric_limits<double>::infinity()
                             : trace.nll.back();
  }
};

// One EM run. `tol` = 0 disables the stopping rule (used for screening, so
// candidate costs are compared at a matched iteration budget). Convergence
// requires two consecutive sub-tolerance steps: single dips occur mid-
// transient when a kernel scale jumps between iterations.
EmRun run_em(const DataRecord& data, const MISOSetup& setup, Eta eta,
             int max_iter, double tol, const EmOptions& opts) {
  StackedData sd = build_stacked(data, setup, eta.theta);
  EmRun run;
  Eigen::VectorXd prev = eta.stacked();
  run.trace.termination = "max_iterations";
  int calm = 0;
  for (int n = 0; n < max_iter; ++n) {
    const PosteriorMoments post = e_step(sd, eta);
    run.trace.nll.push_back(marginal_nll(sd, eta));

    for (int b = 0; b < setup.blocks(); ++b) {
      const auto [lam, bet] = update_hyperparams(
          post.M_hat.block(b * setup.l, b * setup.l, setup.l, setup.l),
          opts.beta_min, opts.beta_max);
      eta.lambda(b) = lam;
      eta.beta(b) = bet;
    }
    eta.theta = update_theta(sd, post);
    rebuild_theta(sd, eta.theta);
    eta.sigma2 = update_sigma(sd, post);

    const Eigen::VectorXd cur = eta.stacked();
    const double rel = (cur - prev).norm() / prev.norm();
    run.trace.rel_change.push_back(rel);
    prev = cur;
    run.trace.iterations = n + 1;
    calm = (tol > 0.0 && rel < tol) ? calm + 1 : 0;
    if (calm >= 2) {
      run.trace.termination = "converged";
      break;
    }
  }
  run.trace.nll.push_back(marginal_nll(sd, eta));
  run.eta = std::move(eta);
  return run;
}

// Appends `cont` (an EM run continued from `head`'s final state) to `head`.
// The first cost entry of `cont` repeats the last of `head` and is dropped.
EmRun merge_runs(const EmRun& head, EmRun cont) {
  EmRun out;
  out.eta = std::move(cont.eta);
  out.trace.nll = head.trace.nll;
  out.trace.nll.pop_back();
  out.trace.nll.insert(out.trace.nll.end(), cont.trace.nll.begin(),
                       cont.trace.nll.end());
  out.trace.rel_change = head.trace.rel_change;
  out.trace.rel_change.insert(out.trace.rel_change.end(),
                              cont.trace.rel_change.begin(),
                              cont.trace.rel_change.end());
  out.trace.iterations = head.trace.iterations + cont.trace.iterations;
  out.trace.termination = cont.trace.termination;
  return out;
}

}  // namespace

IdentResult identify(const DataRecord& data, const MISOSetup& setup,
                     const EmOptions& opts) {
  for (int k : setup.gp_inputs)
    if (k == setup.i || k == setup.j)
      throw Error("GP inputs must exclude the target input and the output");
  if (setup.i == setup.j) throw Error("target input equals the output node");

  const Eigen::VectorXd wj = data.w.col(setup.j - 1);
  const double var_wj =
      (wj.array() - wj.mean()).square().sum() / std::max(1, data.N - 1);
  if (!(var_wj > 0.0)) throw Error("output node signal is constant");

  // Impulse-response taps are O(1) whatever the signal scale, hence the
  // absolute kernel scale; the noise share does scale with the output.
  // A short initial kernel memory (0.5) matters: long initial memories trap
  // the self-block decay at a poor stationary point of the profile cost.
  auto with_default_scales = [&](Eigen::VectorXd theta) {
    Eta eta;
    eta.theta = std::move(theta);
    eta.lambda = Eigen::VectorXd::Constant(setup.blocks(), 0.1);
    eta.beta = Eigen::VectorXd::Constant(setup.blocks(), 0.5);
    eta.sigma2 = 0.1 * var_wj;
    return eta;
  };

  EmRun winner;
  if (opts.random_init) {
    NormalRng rng(substream_seed(opts.init_seed, 0x517, 3));
    Eta eta;
    eta.theta.resize(setup.n_theta());
    for (int m = 0; m < setup.n_theta(); ++m) eta.theta(m) = 0.5 * rng.normal();
    eta.lambda.resize(setup.blocks());
    eta.beta.resize(setup.blocks());
    for (int b = 0; b < setup.blocks(); ++b) {
      eta.lambda(b) = var_wj * std::exp(rng.normal());
      eta.beta(b) = 0.5 + 0.49 * rng.uniform01();
    }
    eta.sigma2 = var_wj * (0.1 + 0.9 * rng.uniform01());
    winner = run_em(data, setup, std::move(eta), opts.max_iter, opts.tol,
                    opts);
  } else {
    const std::vector<Eigen::VectorXd> starts =
        default_theta_starts(data, setup);
    std::vector<EmRun> screened;
    screened.reserve(starts.size());
    std::string last_error;
    for (const auto& th : starts) {
      try {
        screened.push_back(run_em(data, setup, with_default_scales(th),
                                  std::max(1, opts.screen_iters), 0.0,
                                  opts));
      } catch (const Error& e) {
        screened.push_back(EmRun{});  // infinite cost, never selected
        last_error = e.what();
      }
    }

    std::vector<int> order;
    for (int m = 0; m < static_cast<int>(screened.size()); ++m)
      if (std::isfinite(screened[m].final_nll())) order.push_back(m);
    if (order.empty())
      throw IllConditioned("every candidate start failed; last error: " +
                           last_error);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return screened[a].final_nll() < screened[b].final_nll();
    });
    if (static_cast<int>(order.size()) > std::max(1, opts.screen_keep))
      order.resize(std::max(1, opts.screen_keep));

    bool have = false;
    for (int idx : order) {
      EmRun full = screened[idx];
      if (full.trace.termination != "converged") {
        try {
          full = merge_runs(screened[idx],
                            run_em(data, setup, screened[idx].eta,
                                   opts.max_iter, opts.tol, opts));
        } catch (const Error&) {
          // keep the screened state; it is a valid EM iterate
        }
      }
      if (!have || full.final_nll() < winner.final_nll()) {
        winner = std::move(full);
        have = true;
      }
    }
  }

  IdentResult res;
  res.setup = setup;
  res.trace = std::move(winner.trace);
  res.eta = std::move(winner.eta);
  const Eta& eta = res.eta;

  StackedData sd = build_stacked(data, setup, eta.theta);
  const PosteriorMoments post = e_step(sd, eta);
  for (int b = 0; b < setup.blocks(); ++b) {
    const Eigen::VectorXd mb = post.m_hat.segment(b * setup.l, setup.l);
    res.gp_ir.emplace_back(mb.data(), mb.data() + mb.size());
  }
  std::vector<double> bc(setup.n_b + 1, 0.0), fc(setup.n_f + 1, 0.0);
  bc[0] = 0.0;
  fc[0] = 1.0;
  for (int u = 1; u <= setup.n_b; ++u) bc[u] = eta.theta(u - 1);
  for (int v = 1; v <= setup.n_f; ++v) fc[v] = eta.theta(setup.n_b + v - 1);
  res.target_ir =
      impulse_response(RationalTF(Poly(bc), Poly(fc)), opts.ir_taps);
  return res;
}

}  // namespace netid
