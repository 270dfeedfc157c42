#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "netid/ebdm.hpp"
#include "netid/errors.hpp"
#include "netid/kernel.hpp"
#include "netid/network.hpp"
#include "netid/regression.hpp"
#include "netid/rng.hpp"

using namespace netid;

namespace {

// Dense prior covariance blockdiag(lambda_b K_{beta_b}) of the stacked GP.
Eigen::MatrixXd dense_prior(const MISOSetup& setup, const Eta& eta) {
  const int l = setup.l;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(setup.blocks() * l,
                                            setup.blocks() * l);
  for (int b = 0; b < setup.blocks(); ++b)
    K.block(b * l, b * l, l, l) =
        kernel_build({l, eta.beta(b), eta.lambda(b)});
  return K;
}

struct Instance {
  DataRecord data;
  MISOSetup setup;
  StackedData sd;
  Eta eta;
};

Instance make_instance(int N, int l, int blocks, std::uint64_t seed,
                       int skip = -1) {
  Instance inst;
  inst.data = simulate(builtin_case("case1"), N, seed);
  inst.setup.j = 3;
  inst.setup.i = 1;
  if (blocks >= 2) inst.setup.gp_inputs.push_back(2);
  if (blocks >= 3) inst.setup.gp_inputs.push_back(4);
  inst.setup.n_b = 2;
  inst.setup.n_f = 2;
  inst.setup.l = l;
  inst.setup.skip = skip;

  Eigen::VectorXd theta(4);
  theta << 0.4, -0.2, 0.3, 0.1;
  inst.sd = build_stacked(inst.data, inst.setup, theta);

  inst.eta.theta = theta;
  inst.eta.lambda = Eigen::VectorXd::LinSpaced(blocks, 0.5, 1.2);
  inst.eta.beta = Eigen::VectorXd::LinSpaced(blocks, 0.55, 0.8);
  inst.eta.sigma2 = 0.3;
  return inst;
}

}  // namespace

TEST_CASE("E-step equals dense joint-Gaussian conditioning") {
  const Instance inst = make_instance(20, 5, 3, 101, 0);
  const PosteriorMoments post = e_step(inst.sd, inst.eta);

  const Eigen::MatrixXd K = dense_prior(inst.setup, inst.eta);
  const Eigen::MatrixXd& W = inst.sd.W;
  const Eigen::VectorXd z = inst.sd.wj - inst.sd.wji_times(inst.eta.theta);
  Eigen::MatrixXd P = W * K * W.transpose();
  P.diagonal().array() += inst.eta.sigma2;
  const Eigen::MatrixXd Pinv = P.inverse();
  const Eigen::VectorXd m_ref = K * W.transpose() * Pinv * z;
  const Eigen::MatrixXd P_ref = K - K * W.transpose() * Pinv * W * K;

  CHECK((post.m_hat - m_ref).norm() < 1e-8 * (1.0 + m_ref.norm()));
  CHECK((post.P_m - P_ref).norm() < 1e-8 * (1.0 + P_ref.norm()));
  CHECK((post.M_hat - (P_ref + m_ref * m_ref.transpose())).norm() <
        1e-7 * (1.0 + post.M_hat.norm()));
  CHECK(post.rcond > 0.0);
}

TEST_CASE("E-step degenerate limits") {
  Instance inst = make_instance(40, 6, 2, 7);
  SUBCASE("vanishing prior scale pins the coefficients at zero") {
    inst.eta.lambda.setConstant(1e-12);
    const PosteriorMoments post = e_step(inst.sd, inst.eta);
    CHECK(post.m_hat.norm() < 1e-4);
    CHECK(post.P_m.norm() < 1e-10);
  }
  SUBCASE("uninformative data returns the prior") {
    inst.eta.sigma2 = 1e12;
    const PosteriorMoments post = e_step(inst.sd, inst.eta);
    const Eigen::MatrixXd K = dense_prior(inst.setup, inst.eta);
    CHECK(post.m_hat.norm() < 1e-4);
    CHECK((post.P_m - K).norm() < 1e-6 * K.norm());
  }
  SUBCASE("nonpositive innovation variance is rejected") {
    inst.eta.sigma2 = 0.0;
    CHECK_THROWS_AS(e_step(inst.sd, inst.eta), NonpositiveVariance);
  }
  SUBCASE("hyperparameter count must match the blocks") {
    inst.eta.lambda = Eigen::VectorXd::Ones(5);
    CHECK_THROWS_AS(e_step(inst.sd, inst.eta), Error);
  }
}

TEST_CASE("marginal cost against dense evaluation") {
  auto dense_nll = [](const Instance& inst) {
    const Eigen::MatrixXd K = dense_prior(inst.setup, inst.eta);
    const Eigen::VectorXd z =
        inst.sd.wj - inst.sd.wji_times(inst.eta.theta);
    Eigen::MatrixXd P = inst.sd.W * K * inst.sd.W.transpose();
    P.diagonal().array() += inst.eta.sigma2;
    const Eigen::LLT<Eigen::MatrixXd> llt(P);
    REQUIRE(llt.info() == Eigen::Success);
    const double logdet =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return logdet + z.dot(llt.solve(z));
  };
  SUBCASE("low-rank path (more rows than GP coefficients)") {
    const Instance inst = make_instance(100, 10, 2, 13, 0);
    REQUIRE(inst.sd.bl() < inst.sd.N);
    const double fast = marginal_nll(inst.sd, inst.eta);
    CHECK(fast == doctest::Approx(dense_nll(inst)).epsilon(1e-7));
  }
  SUBCASE("dense path (GP coefficients dominate)") {
    const Instance inst = make_instance(20, 8, 3, 13, 0);
    REQUIRE(inst.sd.bl() >= inst.sd.N);
    const double fast = marginal_nll(inst.sd, inst.eta);
    CHECK(fast == doctest::Approx(dense_nll(inst)).epsilon(1e-7));
  }
  SUBCASE("zero prior scale reduces to the white-noise cost") {
    Instance inst = make_instance(60, 6, 2, 17);
    inst.eta.lambda.setConstant(0.0);
    const Eigen::VectorXd z =
        inst.sd.wj - inst.sd.wji_times(inst.eta.theta);
    const double want = inst.sd.N * std::log(inst.eta.sigma2) +
                        z.squaredNorm() / inst.eta.sigma2;
    CHECK(marginal_nll(inst.sd, inst.eta) ==
          doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("kernel hyperparameter update") {
  SUBCASE("self-consistency: scaled kernel recovers scale and decay") {
    const double beta0 = 0.6, c = 2.0;
    const Eigen::MatrixXd M = c * kernel_build({30, beta0, 1.0});
    const auto [lam, bet] = update_hyperparams(M, 1e-4, 1.0 - 1e-6);
    CHECK(bet == doctest::Approx(beta0).epsilon(1e-4));
    CHECK(lam == doctest::Approx(c).epsilon(1e-3));
  }
  SUBCASE("achieves the 2-D grid minimum of the prior objective") {
    // Posterior second moment from a real E-step block.
    const Instance inst = make_instance(60, 10, 2, 23);
    const PosteriorMoments post = e_step(inst.sd, inst.eta);
    const int l = inst.setup.l;
    const Eigen::MatrixXd M = post.M_hat.topLeftCorner(l, l);
    const auto [lam, bet] = update_hyperparams(M, 1e-4, 1.0 - 1e-6);

    auto objective = [&](double lambda, double beta) {
      const Eigen::MatrixXd K = kernel_build({l, beta, lambda});
      const Eigen::LLT<Eigen::MatrixXd> llt(K);
      if (llt.info() != Eigen::Success)
        return std::numeric_limits<double>::infinity();
      const double logdet =
          2.0 * llt.matrixLLT().diagonal().array().log().sum();
      return logdet + llt.solve(M).trace();
    };
    const double achieved = objective(lam, bet);
    double grid_best = std::numeric_limits<double>::infinity();
    for (int x = 0; x < 200; ++x) {
      const double beta = 0.005 + x * (0.994 / 199.0);
      for (int y = 0; y < 200; ++y) {
        const double lambda = lam * std::pow(10.0, -1.0 + 2.0 * y / 199.0);
        grid_best = std::min(grid_best, objective(lambda, beta));
      }
    }
    CHECK(achieved <= grid_best + 1e-6 * (1.0 + std::abs(grid_best)));
  }
  SUBCASE("decay stays inside the clamp") {
    const Eigen::MatrixXd M = 0.5 * kernel_build({10, 0.999999, 1.0});
    const auto [lam, bet] = update_hyperparams(M, 1e-4, 1.0 - 1e-6);
    CHECK(bet >= 1e-4);
    CHECK(bet <= 1.0 - 1e-6);
    CHECK(lam > 0.0);
  }
}

TEST_CASE("target-coefficient update maximizes the expected quadratic") {
  const Instance inst = make_instance(30, 4, 2, 41);
  const PosteriorMoments post = e_step(inst.sd, inst.eta);
  const Eigen::VectorXd theta_hat = update_theta(inst.sd, post);
  const int nth = inst.setup.n_theta();

  auto q_at = [&](const Eigen::VectorXd& th) {
    Eta eta = inst.eta;
    eta.theta = th;
    return q_objective(inst.sd, post, eta);
  };

  SUBCASE("finite-difference gradient vanishes at the update") {
    const double h = 1e-5;
    const double scale = 1.0 + std::abs(q_at(theta_hat));
    for (int r = 0; r < nth; ++r) {
      Eigen::VectorXd up = theta_hat, dn = theta_hat;
      up(r) += h;
      dn(r) -= h;
      const double grad = (q_at(up) - q_at(dn)) / (2.0 * h);
      CHECK(std::abs(grad) < 1e-6 * scale);
    }
  }

  SUBCASE("matches the dense quadratic reconstructed by sampling") {
    // The expected complete-data objective is exactly quadratic in theta;
    // rebuild it from function values and maximize in closed form.
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nth);
    const double q0 = q_at(zero);
    Eigen::MatrixXd A(nth, nth);
    Eigen::VectorXd g(nth);
    for (int r = 0; r < nth; ++r) {
      Eigen::VectorXd up = zero, dn = zero;
      up(r) += 1.0;
      dn(r) -= 1.0;
      const double qp = q_at(up), qm = q_at(dn);
      A(r, r) = -(qp + qm - 2.0 * q0);
      g(r) = 0.5 * (qp - qm);
    }
    for (int r = 0; r < nth; ++r)
      for (int s = r + 1; s < nth; ++s) {
        Eigen::VectorXd both = zero;
        both(r) += 1.0;
        both(s) += 1.0;
        Eigen::VectorXd er = zero, es = zero;
        er(r) += 1.0;
        es(s) += 1.0;
        const double cross = -(q_at(both) - q_at(er) - q_at(es) + q0);
        A(r, s) = cross;
        A(s, r) = cross;
      }
    const Eigen::VectorXd theta_ref = A.ldlt().solve(g);
    CHECK((theta_hat - theta_ref).norm() <
          1e-6 * (1.0 + theta_ref.norm()));
  }
}

TEST_CASE("coefficients recovered near truth when the rest is exact") {
  // A few EM passes from the true coefficients stay inside a finite-sample
  // box around them (an escape to the collapsed-denominator optimum would
  // move them by more than 0.5).
  const NetworkModel net = builtin_case("case1");
  const DataRecord data = simulate(net, 500, 3);
  MISOSetup setup;
  setup.j = 3;
  setup.i = 1;
  setup.gp_inputs = {2, 4};
  setup.n_b = 2;
  setup.n_f = 2;
  setup.l = 50;
  Eigen::VectorXd theta0(4);
  theta0 << 1.0, 0.05, 1.0, 0.6;

  Eta eta;
  eta.theta = theta0;
  eta.lambda = Eigen::VectorXd::Constant(3, 0.1);
  eta.beta = Eigen::VectorXd::Constant(3, 0.5);
  eta.sigma2 = 0.5;
  StackedData sd = build_stacked(data, setup, theta0);
  for (int n = 0; n < 8; ++n) {
    const PosteriorMoments post = e_step(sd, eta);
    for (int b = 0; b < setup.blocks(); ++b) {
      const auto [lam, bet] = update_hyperparams(
          post.M_hat.block(b * setup.l, b * setup.l, setup.l, setup.l),
          1e-4, 1.0 - 1e-6);
      eta.lambda(b) = lam;
      eta.beta(b) = bet;
    }
    eta.theta = update_theta(sd, post);
    rebuild_theta(sd, eta.theta);
    eta.sigma2 = update_sigma(sd, post);
  }
  for (int r = 0; r < 4; ++r)
    CHECK(std::abs(eta.theta(r) - theta0(r)) < 0.15);
  CHECK(eta.sigma2 == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("innovation-variance update") {
  const Instance inst = make_instance(50, 6, 2, 59);
  const PosteriorMoments post = e_step(inst.sd, inst.eta);
  const double s2 = update_sigma(inst.sd, post);
  REQUIRE(s2 > 0.0);

  SUBCASE("stationary point of the expected objective") {
    auto q_at = [&](double sigma2) {
      Eta eta = inst.eta;
      eta.sigma2 = sigma2;
      return q_objective(inst.sd, post, eta);
    };
    const double h = 1e-6 * s2;
    const double grad = (q_at(s2 + h) - q_at(s2 - h)) / (2.0 * h);
    // Scale by the curvature-free magnitude N/s2 of the two terms.
    CHECK(std::abs(grad) < 1e-8 * (inst.sd.N / s2));
  }

  SUBCASE("zero prior reduces to the mean squared residual") {
    Eta eta = inst.eta;
    eta.lambda.setConstant(1e-14);
    const PosteriorMoments flat = e_step(inst.sd, eta);
    const Eigen::VectorXd z =
        inst.sd.wj - inst.sd.wji_times(inst.sd.theta);
    CHECK(update_sigma(inst.sd, flat) ==
          doctest::Approx(z.squaredNorm() / inst.sd.N).epsilon(1e-6));
  }
}

TEST_CASE("marginal cost is non-increasing along an EM run") {
  const NetworkModel net = builtin_case("case1");
  const DataRecord data = simulate(net, 200, 71);
  MISOSetup setup;
  setup.j = 3;
  setup.i = 1;
  setup.gp_inputs = {2, 4};
  setup.n_b = 2;
  setup.n_f = 2;
  setup.l = 25;

  Eta eta;
  eta.theta = Eigen::VectorXd::Zero(4);
  eta.lambda = Eigen::VectorXd::Constant(3, 0.1);
  eta.beta = Eigen::VectorXd::Constant(3, 0.5);
  eta.sigma2 = 1.0;
  StackedData sd = build_stacked(data, setup, eta.theta);

  std::vector<double> nll;
  for (int n = 0; n < 20; ++n) {
    const PosteriorMoments post = e_step(sd, eta);
    nll.push_back(marginal_nll(sd, eta));
    for (int b = 0; b < setup.blocks(); ++b) {
      const auto [lam, bet] = update_hyperparams(
          post.M_hat.block(b * setup.l, b * setup.l, setup.l, setup.l),
          1e-4, 1.0 - 1e-6);
      eta.lambda(b) = lam;
      eta.beta(b) = bet;
    }
    eta.theta = update_theta(sd, post);
    rebuild_theta(sd, eta.theta);
    eta.sigma2 = update_sigma(sd, post);
  }
  nll.push_back(marginal_nll(sd, eta));
  for (size_t n = 1; n < nll.size(); ++n)
    CHECK(nll[n] <= nll[n - 1] + 1e-8 * std::abs(nll[n - 1]));
}

TEST_CASE("starting-point enumeration") {
  const NetworkModel net = builtin_case("case2");
  const DataRecord data = simulate(net, 400, 5);
  MISOSetup setup;
  setup.j = 3;
  setup.i = 1;
  setup.gp_inputs = {2, 4};
  setup.n_b = 2;
  setup.n_f = 2;
  setup.l = 100;

  SUBCASE("least-squares start has the right shape") {
    const Eigen::VectorXd th = arx_init(data, setup);
    CHECK(th.size() == 4);
    CHECK(th.allFinite());
  }
  SUBCASE("lattice covers stable and unstable denominators twice") {
    const auto starts = default_theta_starts(data, setup);
    // least squares + zero + 5x4 lattice with two numerator variants.
    CHECK(starts.size() == 2 + 5 * 4 * 2);
    for (const auto& th : starts) CHECK(th.size() == 4);
    CHECK(starts[1].norm() == 0.0);
    // The unit-numerator variant at the unstable corner must be present.
    bool found = false;
    for (const auto& th : starts)
      found = found || (th(0) == 1.0 && th(1) == 0.0 && th(2) == 1.8 &&
                        th(3) == 1.2);
    CHECK(found);
  }
  SUBCASE("first-order denominators use a 1-D lattice") {
    MISOSetup s1 = setup;
    s1.n_b = 1;
    s1.n_f = 1;
    const auto starts = default_theta_starts(data, s1);
    CHECK(starts.size() == 2 + 5 * 2);
  }
  SUBCASE("pure numerator fit returns only the direct starts") {
    MISOSetup s0 = setup;
    s0.n_f = 0;
    const auto starts = default_theta_starts(data, s0);
    CHECK(starts.size() == 2);
  }
  SUBCASE("records too short for least squares still yield starts") {
    DataRecord tiny;
    tiny.N = 3;
    tiny.w = Eigen::MatrixXd::Random(3, 4);
    tiny.r = Eigen::MatrixXd::Zero(3, 4);
    const auto starts = default_theta_starts(tiny, setup);
    CHECK(!starts.empty());
    for (const auto& th : starts) CHECK(th.allFinite());
  }
}

TEST_CASE("full identification smoke run") {
  const NetworkModel net = builtin_case("case1");
  const DataRecord data = simulate(net, 300, 11);
  MISOSetup setup;
  setup.j = 3;
  setup.i = 1;
  setup.gp_inputs = {2, 4};
  setup.n_b = 2;
  setup.n_f = 2;
  setup.l = 40;

  SUBCASE("default multistart returns a usable estimate") {
    EmOptions opts;
    opts.max_iter = 30;
    opts.screen_iters = 4;
    opts.ir_taps = 60;
    const IdentResult res = identify(data, setup, opts);
    CHECK(res.eta.theta.size() == 4);
    CHECK(res.eta.theta.allFinite());
    CHECK(res.eta.sigma2 > 0.0);
    CHECK(res.target_ir.size() == 60);
    CHECK(res.gp_ir.size() == 3);
    for (const auto& ir : res.gp_ir) CHECK(ir.size() == 40);
    REQUIRE(res.trace.nll.size() >= 2);
    // Screening compares candidates at matched budgets, and the polish is
    // seeded with the best of them, so the overall trace may only improve.
    CHECK(res.trace.nll.back() <= res.trace.nll.front() + 1e-8);
    CHECK((res.trace.termination == "converged" ||
           res.trace.termination == "max_iterations"));
  }
  SUBCASE("random initialization is reproducible") {
    EmOptions opts;
    opts.random_init = true;
    opts.init_seed = 99;
    opts.max_iter = 8;
    const IdentResult a = identify(data, setup, opts);
    const IdentResult b = identify(data, setup, opts);
    CHECK(a.eta.theta == b.eta.theta);
    CHECK(a.eta.sigma2 == b.eta.sigma2);
    CHECK(a.trace.nll == b.trace.nll);
  }
}
