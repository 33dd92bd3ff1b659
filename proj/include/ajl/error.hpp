#pragma once

#include <stdexcept>
#include <string>

namespace ajl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs violate a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// ODE blow-up, divergent integral, or quadrature failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The estimator cannot produce a value (Γ-truncation, empty kernel window).
class EstimatorUnavailable : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ajl
