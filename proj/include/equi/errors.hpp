#pragma once

#include <stdexcept>
#include <string>

namespace equi {

/// Shape or membership mismatch between arguments (e.g. vectors of different algebras).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configured size cap (closure size, enumeration radius, candidate count) was exceeded.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative method or quadrature failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input is mathematically degenerate for the requested operation
/// (singular matrix, degenerate Killing restriction, missing sl2-triple, ...).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A checked invariant failed. `name()` identifies the invariant.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(std::string invariant, const std::string& detail)
      : std::runtime_error(invariant + ": " + detail), invariant_(std::move(invariant)) {}
  const std::string& name() const { return invariant_; }

 private:
  std::string invariant_;
};

}  // namespace equi
