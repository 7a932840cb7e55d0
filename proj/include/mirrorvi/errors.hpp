#pragma once

#include <stdexcept>
#include <string>

namespace mirrorvi {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (domain, dimension, sign).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An unsupported combination of components, e.g. a prox-function paired
/// with a set it has no closed-form step for.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised by the adaptive step rule when the operator value vanishes.
class ZeroOperatorValue : public Error {
 public:
  using Error::Error;
};

/// The switching method finished without a single productive step.
class NoProductiveSteps : public Error {
 public:
  using Error::Error;
};

}  // namespace mirrorvi
