#pragma once

#include <Eigen/Dense>
#include <utility>

namespace netid {

// First-order stable-spline kernel over lags 1..l:
// K[x, y] = lambda * beta^max(x, y), beta in [0, 1), lambda >= 0.
struct SSKernel {
  int l = 1;
  double beta = 0.0;
  double lambda = 0.0;
};

// Unit-lower-triangular L and diagonal D with L * diag(D) * L^T == K/lambda:
// L[x, y] = beta^(x - y) for x >= y, D = (beta, beta^2(1-beta), ...,
// beta^l(1-beta)). L^{-1} is bidiagonal (1 on the diagonal, -beta below).
struct KernelFactorization {
  Eigen::MatrixXd L;
  Eigen::VectorXd D;
};

// Dense kernel matrix. Throws DegenerateKernel outside the parameter domain.
Eigen::MatrixXd kernel_build(const SSKernel& k);

// Factorize K/lambda. Requires beta in (0, 1) (D would be singular at 0).
KernelFactorization kernel_factorize(double beta, int l);

// log det K and K^{-1} B without forming K^{-1}; O(l * cols). Requires
// lambda > 0 and beta in (0, 1).
std::pair<double, Eigen::MatrixXd> kernel_logdet_and_solve(
    const SSKernel& k, const Eigen::MatrixXd& B);

// log det of K with lambda == 1: l(l+1)/2 * log(beta) + (l-1) * log(1-beta).
double kernel_logdet_unit(double beta, int l);

// Lower-triangular square root of K (K = S S^T), entries
// sqrt(lambda * D[y]) * beta^(x-y). Well defined for beta in [0,1),
// lambda >= 0; degenerate parameters give a zero factor, not an error.
Eigen::MatrixXd kernel_sqrt(double beta, double lambda, int l);

// trace(K_beta^{-1} M) for lambda == 1, given the main diagonal and first
// superdiagonal of symmetric M (K^{-1} is tridiagonal). Long-double
// accumulation: entries of K^{-1} reach beta^{-l}.
long double kernel_inv_trace_unit(double beta, const Eigen::VectorXd& diag,
                                  const Eigen::VectorXd& superdiag);

}  // namespace netid
