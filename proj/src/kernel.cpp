#include "netid/kernel.hpp"

#include <cmath>

#include "netid/errors.hpp"

namespace netid {

namespace {

void check_domain(double beta, double lambda, int l) {
  if (l < 1) throw DegenerateKernel("kernel length must be >= 1");
  if (!(beta >= 0.0 && beta < 1.0))
    throw DegenerateKernel("kernel decay must lie in [0, 1)");
  if (!(lambda >= 0.0)) throw DegenerateKernel("kernel scale must be >= 0");
}

}  // namespace

Eigen::MatrixXd kernel_build(const SSKernel& k) {
  check_domain(k.beta, k.lambda, k.l);
  Eigen::MatrixXd K(k.l, k.l);
  std::vector<double> pw(static_cast<size_t>(k.l) + 1, 1.0);
  for (int m = 1; m <= k.l; ++m) pw[m] = pw[m - 1] * k.beta;
  for (int x = 1; x <= k.l; ++x)
    for (int y = 1; y <= k.l; ++y)
      K(x - 1, y - 1) = k.lambda * pw[std::max(x, y)];
  return K;
}

KernelFactorization kernel_factorize(double beta, int l) {
  check_domain(beta, 1.0, l);
  if (beta == 0.0)
    throw DegenerateKernel("factorization needs beta in (0, 1)");
  KernelFactorization f;
  f.L = Eigen::MatrixXd::Zero(l, l);
  f.D = Eigen::VectorXd(l);
  f.D(0) = beta;
  for (int m = 2; m <= l; ++m) f.D(m - 1) = std::pow(beta, m) * (1.0 - beta);
  for (int y = 0; y < l; ++y) {
    double v = 1.0;
    for (int x = y; x < l; ++x) {
      f.L(x, y) = v;
      v *= beta;
    }
  }
  return f;
}

double kernel_logdet_unit(double beta, int l) {
  check_domain(beta, 1.0, l);
  if (beta == 0.0) throw DegenerateKernel("log det undefined for beta = 0");
  return 0.5 * l * (l + 1) * std::log(beta) + (l - 1) * std::log1p(-beta);
}

std::pair<double, Eigen::MatrixXd> kernel_logdet_and_solve(
    const SSKernel& k, const Eigen::MatrixXd& B) {
  check_domain(k.beta, k.lambda, k.l);
  if (k.beta == 0.0 || k.lambda == 0.0)
    throw DegenerateKernel("solve needs beta in (0, 1) and lambda > 0");
  if (B.rows() != k.l) throw Error("right-hand side row count mismatch");

  const double logdet =
      kernel_logdet_unit(k.beta, k.l) + k.l * std::log(k.lambda);

  Eigen::VectorXd dinv(k.l);
  dinv(0) = 1.0 / (k.lambda * k.beta);
  for (int m = 2; m <= k.l; ++m)
    dinv(m - 1) = 1.0 / (k.lambda * std::pow(k.beta, m) * (1.0 - k.beta));

  // K = L diag(lambda D) L^T with bidiagonal L^{-1}: apply
  // L^{-1}, diag(1/(lambda D)), then L^{-T}.
  Eigen::MatrixXd X(k.l, B.cols());
  for (int r = k.l - 1; r >= 1; --r)
    X.row(r) = B.row(r) - k.beta * B.row(r - 1);
  X.row(0) = B.row(0);
  X.array().colwise() *= dinv.array();
  for (int r = 0; r + 1 < k.l; ++r) X.row(r) -= k.beta * X.row(r + 1);
  return {logdet, std::move(X)};
}

Eigen::MatrixXd kernel_sqrt(double beta, double lambda, int l) {
  check_domain(beta, lambda, l);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(l, l);
  for (int y = 1; y <= l; ++y) {
    const double dy = (y == 1) ? beta : std::pow(beta, y) * (1.0 - beta);
    double v = std::sqrt(lambda * dy);
    for (int x = y; x <= l; ++x) {
      S(x - 1, y - 1) = v;
      v *= beta;
    }
  }
  return S;
}

long double kernel_inv_trace_unit(double beta, const Eigen::VectorXd& diag,
                                  const Eigen::VectorXd& superdiag) {
  const int l = static_cast<int>(diag.size());
  check_domain(beta, 1.0, l);
  if (beta == 0.0) throw DegenerateKernel("trace undefined for beta = 0");
  if (superdiag.size() != l - 1)
    throw Error("superdiagonal length must be l - 1");

  // tr(K^{-1} M) = sum_x (row_x L^{-1}) M (row_x L^{-1})^T / D_x with
  // row_x L^{-1} = e_x - beta e_{x-1}; every summand is >= 0 for PSD M,
  // so the accumulation is cancellation-free.
  const long double b = beta;
  const long double ib = 1.0L / b;
  const long double inv1mb = 1.0L / (1.0L - b);
  long double acc = static_cast<long double>(diag(0)) * ib;
  long double pw = ib;
  for (int x = 2; x <= l; ++x) {
    pw *= ib;
    long double bracket = static_cast<long double>(diag(x - 1)) -
                          2.0L * b * static_cast<long double>(superdiag(x - 2)) +
                          b * b * static_cast<long double>(diag(x - 2));
    if (bracket < 0.0L) bracket = 0.0L;
    acc += bracket * pw * inv1mb;
  }
  return acc;
}

}  // namespace netid
