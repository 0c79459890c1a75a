#pragma once

#include <stdexcept>
#include <string>

namespace mra {

/// Bad shapes, out-of-range frequencies, malformed files or configs.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Eigensolver non-convergence, symmetry residue violations and similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that would exceed its configured memory or enumeration budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, unsigned long long progress)
      : std::runtime_error(what), progress_(progress) {}
  unsigned long long progress() const noexcept { return progress_; }

 private:
  unsigned long long progress_;
};

/// A machine-checked combinatorial statement found a counterexample.
class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mra
