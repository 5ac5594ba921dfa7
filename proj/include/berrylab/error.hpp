#pragma once

#include <stdexcept>
#include <string>

namespace berrylab {

/// Bad input: malformed configuration, violated preconditions, containment
/// failures. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation ran but could not deliver its contract (non-convergence,
/// degenerate levels, broken transport). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the Wilson loop when a step phase exceeds the refinement bound.
class RefinementRequired : public NumericalError {
 public:
  RefinementRequired(const std::string& what, int step, double phase)
      : NumericalError(what), step_(step), phase_(phase) {}
  int step() const { return step_; }
  double phase() const { return phase_; }

 private:
  int step_;
  double phase_;
};

}  // namespace berrylab
