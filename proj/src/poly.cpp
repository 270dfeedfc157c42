#include "netid/poly.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "netid/errors.hpp"

namespace netid {

Poly::Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) {
  if (c_.empty()) throw Error("polynomial needs at least one coefficient");
}

RationalTF::RationalTF(Poly num, Poly den)
    : num_(std::move(num)), den_(std::move(den)) {
  if (!den_.is_monic())
    throw Error("transfer function denominator must be monic");
}

Poly multiply(const Poly& a, const Poly& b) {
  std::vector<double> r(a.coeffs().size() + b.coeffs().size() - 1, 0.0);
  for (size_t i = 0; i < a.coeffs().size(); ++i)
    for (size_t j = 0; j < b.coeffs().size(); ++j)
      r[i + j] += a.coeffs()[i] * b.coeffs()[j];
  return Poly(std::move(r));
}

Poly add(const Poly& a, const Poly& b) {
  std::vector<double> r(std::max(a.coeffs().size(), b.coeffs().size()), 0.0);
  for (size_t m = 0; m < r.size(); ++m)
    r[m] = a.at(static_cast<int>(m)) + b.at(static_cast<int>(m));
  return Poly(std::move(r));
}

Poly subtract(const Poly& a, const Poly& b) {
  std::vector<double> r(std::max(a.coeffs().size(), b.coeffs().size()), 0.0);
  for (size_t m = 0; m < r.size(); ++m)
    r[m] = a.at(static_cast<int>(m)) - b.at(static_cast<int>(m));
  return Poly(std::move(r));
}

Poly scale(const Poly& a, double s) {
  std::vector<double> r = a.coeffs();
  for (double& x : r) x *= s;
  return Poly(std::move(r));
}

std::vector<std::complex<double>> roots(const Poly& p) {
  // z-domain polynomial: coeffs ascending in q^-1 are descending in z.
  const std::vector<double>& c = p.coeffs();
  size_t lead = 0;
  while (lead < c.size() && c[lead] == 0.0) ++lead;
  if (lead == c.size()) throw Error("roots of the zero polynomial");
  const size_t d = c.size() - 1 - lead;  // degree in z
  std::vector<std::complex<double>> out;
  if (d == 0) return out;

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  for (size_t r = 1; r < d; ++r) companion(r, r - 1) = 1.0;
  for (size_t r = 0; r < d; ++r)
    companion(r, d - 1) = -c[c.size() - 1 - r] / c[lead];
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  if (es.info() != Eigen::Success)
    throw IllConditioned("eigenvalue iteration failed on companion matrix");
  out.reserve(d);
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    out.push_back(es.eigenvalues()(k));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

namespace {

// Monic real polynomial in q^-1 with the given z-domain roots.
Poly from_roots(const std::vector<std::complex<double>>& rs) {
  std::vector<std::complex<double>> pending(rs.begin(), rs.end());
  Poly acc = Poly::one();
  constexpr double kImagTol = 1e-9;
  // Real roots first.
  std::vector<std::complex<double>> cplx;
  for (const auto& z : pending) {
    if (std::abs(z.imag()) <= kImagTol * (1.0 + std::abs(z))) {
      acc = multiply(acc, Poly({1.0, -z.real()}));
    } else {
      cplx.push_back(z);
    }
  }
  // Complex roots must pair into conjugates. Sorting by (real, |imag|, imag)
  // makes each pair adjacent with the negative-imag member first.
  std::sort(cplx.begin(), cplx.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    if (std::abs(a.imag()) != std::abs(b.imag()))
      return std::abs(a.imag()) < std::abs(b.imag());
    return a.imag() < b.imag();
  });
  if (cplx.size() % 2 != 0)
    throw Error("complex roots do not pair into conjugates");
  for (size_t i = 0; i < cplx.size(); i += 2) {
    const auto &a = cplx[i], &b = cplx[i + 1];
    const double sc = 1.0 + std::abs(a);
    if (std::abs(a.real() - b.real()) > 1e-9 * sc ||
        std::abs(a.imag() + b.imag()) > 1e-9 * sc)
      throw Error("complex roots do not pair into conjugates");
    acc = multiply(acc, Poly({1.0, -2.0 * a.real(), std::norm(a)}));
  }
  return acc;
}

}  // namespace

StabilityFactorization factor_stability(const Poly& p, double tol) {
  if (!p.is_monic())
    throw Error("stability factorization expects a monic polynomial");
  StabilityFactorization out;
  if (p.degree() == 0) return out;  // p == 1: both factors trivial

  std::vector<std::complex<double>> inside, outside;
  for (const auto& z : roots(p)) {
    const double m = std::abs(z);
    if (m < 1.0 - tol) {
      inside.push_back(z);
    } else if (m > 1.0 + tol) {
      outside.push_back(z);
    } else {
      throw RootOnUnitCircle("polynomial root within tolerance of |z| = 1");
    }
  }
  out.stable = from_roots(inside);
  out.antistable = from_roots(outside);

  const Poly recon = multiply(out.stable, out.antistable);
  double scale_max = 0.0, err = 0.0;
  for (int m = 0; m <= std::max(recon.degree(), p.degree()); ++m) {
    scale_max = std::max(scale_max, std::abs(p.at(m)));
    err = std::max(err, std::abs(recon.at(m) - p.at(m)));
  }
  if (err > 1e-6 * std::max(1.0, scale_max))
    throw IllConditioned("stable/anti-stable factor reconstruction failed");

  if (out.antistable.degree() > 0) {
    out.mirror = mirror_antistable(out.antistable);
    out.allpass_gain = 1.0 / std::abs(out.antistable.coeffs().back());
  }
  return out;
}

Poly mirror_antistable(const Poly& fa) {
  if (!fa.is_monic()) throw Error("mirror expects a monic polynomial");
  const double trailing = fa.coeffs().back();
  if (trailing == 0.0)
    throw ZeroTrailingCoefficient("mirror needs a nonzero trailing coefficient");
  std::vector<double> r(fa.coeffs().rbegin(), fa.coeffs().rend());
  for (double& x : r) x /= trailing;
  return Poly(std::move(r));
}

std::vector<double> impulse_response(const RationalTF& g, int n) {
  if (n < 1) throw Error("impulse response length must be >= 1");
  const Poly &b = g.num(), &f = g.den();
  std::vector<double> h(static_cast<size_t>(n), 0.0);
  for (int t = 0; t < n; ++t) {
    double v = b.at(t);
    for (int m = 1; m <= f.degree() && m <= t; ++m) v -= f.at(m) * h[t - m];
    h[t] = v;
  }
  return h;
}

namespace {

std::complex<double> horner_qinv(const Poly& p, std::complex<double> qinv) {
  std::complex<double> v = 0.0;
  for (auto it = p.coeffs().rbegin(); it != p.coeffs().rend(); ++it)
    v = v * qinv + *it;
  return v;
}

}  // namespace

std::complex<double> freq_response(const RationalTF& g, double omega) {
  const std::complex<double> qinv = std::exp(std::complex<double>(0.0, -omega));
  const std::complex<double> den = horner_qinv(g.den(), qinv);
  double den_scale = 0.0;
  for (double c : g.den().coeffs()) den_scale += std::abs(c);
  if (std::abs(den) < 1e-12 * den_scale)
    throw PoleOnUnitCircle("frequency response evaluated at a pole");
  return horner_qinv(g.num(), qinv) / den;
}

RationalTF multiply(const RationalTF& a, const RationalTF& b) {
  return RationalTF(multiply(a.num(), b.num()), multiply(a.den(), b.den()));
}

RationalTF one_minus(const RationalTF& g) {
  return RationalTF(subtract(g.den(), g.num()), g.den());
}

}  // namespace netid
