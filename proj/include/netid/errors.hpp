#pragma once

#include <stdexcept>
#include <string>

namespace netid {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A polynomial root sits within tolerance of the unit circle, so the
// stable/anti-stable split is ill-defined.
class RootOnUnitCircle : public Error {
 public:
  using Error::Error;
};

// Mirror construction needs a nonzero trailing coefficient.
class ZeroTrailingCoefficient : public Error {
 public:
  using Error::Error;
};

// Frequency response evaluated at (numerically) a pole.
class PoleOnUnitCircle : public Error {
 public:
  using Error::Error;
};

// Network definition violates a structural or stability requirement.
class InvalidNetwork : public Error {
 public:
  using Error::Error;
};

// Kernel parameters outside their domain (beta not in [0,1), lambda < 0, ...).
class DegenerateKernel : public Error {
 public:
  using Error::Error;
};

// A factorization or solve lost all significance.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

// Normal equations of a least-squares step are singular.
class SingularNormalEquations : public Error {
 public:
  using Error::Error;
};

// A variance that must be positive is not.
class NonpositiveVariance : public Error {
 public:
  using Error::Error;
};

// Predictor filters of an iterate became unstable.
class UnstablePredictor : public Error {
 public:
  using Error::Error;
};

// Fit metric undefined: reference trajectory is constant.
class ConstantTruth : public Error {
 public:
  using Error::Error;
};

// Malformed input file (JSON/CSV).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that fails semantic validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace netid
