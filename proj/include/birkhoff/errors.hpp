#pragma once

#include <stdexcept>
#include <string>

namespace birkhoff {

/// A documented precondition of an operation does not hold for the given
/// inputs (non-centered observable, non-hyperbolic matrix, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The computation ran but could not certify its result (tail bound not
/// reached, routes disagree, residual too large).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace birkhoff
