#pragma once

#include <complex>
#include <vector>

namespace netid {

// Polynomial in the backward-shift operator q^-1. coeffs()[m] multiplies
// q^-m; index 0 is the constant term, degree() == coeffs().size() - 1.
// Trailing zeros are kept as given (degree is explicit, never inferred).
class Poly {
 public:
  Poly() : c_{1.0} {}
  explicit Poly(std::vector<double> coeffs);

  static Poly one() { return Poly(); }

  const std::vector<double>& coeffs() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  // Coefficient of q^-m, zero outside the stored range.
  double at(int m) const {
    return (m >= 0 && m < static_cast<int>(c_.size())) ? c_[m] : 0.0;
  }
  bool is_monic() const { return c_[0] == 1.0; }

  friend bool operator==(const Poly&, const Poly&) = default;

 private:
  std::vector<double> c_;
};

// Ratio of polynomials in q^-1 with a monic denominator.
class RationalTF {
 public:
  RationalTF() = default;  // 1/1
  RationalTF(Poly num, Poly den);

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  // No direct feedthrough: the q^0 numerator coefficient is zero.
  bool strictly_proper() const { return num_.at(0) == 0.0; }

 private:
  Poly num_{std::vector<double>{1.0}};
  Poly den_{std::vector<double>{1.0}};
};

struct StabilityFactorization {
  Poly stable;       // monic, all roots strictly inside the unit circle
  Poly antistable;   // monic, all roots strictly outside; 1 if none
  Poly mirror;       // mirror of `antistable`: roots reflected inside
  double allpass_gain = 1.0;  // |mirror/antistable| on the unit circle
};

Poly multiply(const Poly& a, const Poly& b);
Poly add(const Poly& a, const Poly& b);
Poly subtract(const Poly& a, const Poly& b);
Poly scale(const Poly& a, double s);

// Roots in the z-domain: zeros of z^deg * p(z^-1), sorted by (real, imag).
// A polynomial with all coefficients zero has no well-defined roots (throws).
std::vector<std::complex<double>> roots(const Poly& p);

// Split a monic polynomial into stable and anti-stable monic factors.
// Throws RootOnUnitCircle if some root has |z| within tol of 1.
StabilityFactorization factor_stability(const Poly& p, double tol = 1e-8);

// Reverse the coefficients and normalize by the trailing one: the roots of
// the result are the reciprocals of the input's. Input must be monic with a
// nonzero trailing coefficient.
Poly mirror_antistable(const Poly& fa);

// First n samples of the impulse response (n >= 1), by the direct recursion.
std::vector<double> impulse_response(const RationalTF& g, int n);

// Value of g at z = e^{i*omega}, i.e. num(e^{-i w})/den(e^{-i w}).
std::complex<double> freq_response(const RationalTF& g, double omega);

// num/den of the product and of 1 - g (denominators multiplied / shared).
RationalTF multiply(const RationalTF& a, const RationalTF& b);
RationalTF one_minus(const RationalTF& g);

}  // namespace netid
