#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "netid/regression.hpp"

namespace netid {

// Parameters estimated by marginal-likelihood maximization. Kernel
// hyperparameters are indexed by GP block: 0 is the self (noise-model)
// block, then one per MISOSetup::gp_inputs entry, in order.
struct Eta {
  Eigen::VectorXd theta;   // [b_1..b_nb, f_1..f_nf] of the target module
  Eigen::VectorXd lambda;  // kernel scales, size = blocks
  Eigen::VectorXd beta;    // kernel decays, size = blocks
  double sigma2 = 1.0;     // innovation variance of the rewritten equation

  // [theta; lambda; beta; sigma2] (convergence is measured on this).
  Eigen::VectorXd stacked() const;
};

struct PosteriorMoments {
  Eigen::VectorXd m_hat;  // posterior mean of the stacked GP coefficients
  Eigen::MatrixXd P_m;    // posterior covariance
  Eigen::MatrixXd M_hat;  // P_m + m_hat m_hat^T
  double rcond = 0.0;     // conditioning estimate of the inner Cholesky
};

struct EmOptions {
  // EM crawls along a flat ridge coupling the leading numerator coefficient,
  // the innovation variance and the self-block scale; budgets below ~150
  // iterations (or looser tolerances) routinely stop mid-crawl with a biased
  // numerator.
  int max_iter = 200;
  double tol = 1e-3;         // relative step size on Eta::stacked()
  bool random_init = false;  // default: deterministic multistart (see below)
  std::uint64_t init_seed = 0;
  double beta_min = 1e-4;
  double beta_max = 1.0 - 1e-6;
  int ir_taps = 100;  // reported impulse-response length

  // Default-init multistart: every candidate theta start gets `screen_iters`
  // EM iterations, the best `screen_keep` by marginal cost continue for the
  // full budget, and the lowest final marginal cost wins. The marginal cost
  // separates the wanted optimum from the spurious one where the denominator
  // collapses and the self GP absorbs the target dynamics, but EM cannot
  // cross between the two basins, hence the multistart.
  int screen_iters = 12;
  int screen_keep = 2;
};

struct EMTrace {
  std::vector<double> nll;         // marginal cost per iterate (+ final)
  std::vector<double> rel_change;  // one per completed iteration
  std::string termination;         // "converged" or "max_iterations"
  int iterations = 0;
};

struct IdentResult {
  MISOSetup setup;
  Eta eta;
  EMTrace trace;
  std::vector<double> target_ir;           // impulse response at theta-hat
  std::vector<std::vector<double>> gp_ir;  // posterior means per GP block
};

// Posterior of the stacked GP coefficient vector given the data and eta,
// with theta taken from the stack (sd.theta). Computed through the kernel
// square root, so lambda = 0 or tiny beta degrade gracefully.
PosteriorMoments e_step(const StackedData& sd, const Eta& eta);

// Marginal cost log det P + z^T P^{-1} z (up to constants), where
// P = sigma2 I + W K W^T and z = w_j - W_ji g(theta). Low-rank evaluation
// when blocks*l < N, dense Cholesky otherwise.
double marginal_nll(const StackedData& sd, const Eta& eta);

// Kernel hyperparameter update for one GP block: minimize
// logdet K_beta + l log tr(K_beta^{-1} M_block) over beta (grid + golden
// section), then lambda = tr(K_beta^{-1} M_block)/l. Returns (lambda, beta).
std::pair<double, double> update_hyperparams(const Eigen::MatrixXd& M_block,
                                             double beta_min, double beta_max);

// Exact minimizer of the expected complete-data quadratic in theta, via the
// banded-product reduction (no N x N matrices are materialized).
Eigen::VectorXd update_theta(const StackedData& sd,
                             const PosteriorMoments& post);

// Innovation-variance update: expected squared residual at the new theta
// (sd must already be rebuilt at it) under the E-step posterior.
double update_sigma(const StackedData& sd, const PosteriorMoments& post);

// Expected complete-data log-likelihood (up to eta-independent constants)
// at `eta`, under the posterior `post`; for monotonicity diagnostics.
double q_objective(const StackedData& sd, const PosteriorMoments& post,
                   const Eta& eta);

// Least-squares initialization of theta from the data (used by identify).
Eigen::VectorXd arx_init(const DataRecord& data, const MISOSetup& setup);

// Candidate theta starts for the default multistart: the least-squares start,
// the zero start, and a coarse lattice over the leading two denominator
// coefficients (covering stable and unstable denominators). Each lattice
// point carries two numerator variants: a least-squares refit and a unit
// impulse (the refit is biased by feedback, so both are tried).
std::vector<Eigen::VectorXd> default_theta_starts(const DataRecord& data,
                                                  const MISOSetup& setup);

// Full EM identification of the target module i -> j.
IdentResult identify(const DataRecord& data, const MISOSetup& setup,
                     const EmOptions& opts = {});

}  // namespace netid
