// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace v2xmec {

/// Input outside the mathematical domain of a function (e.g. nonpositive
/// distance, Lambert-W argument below the branch point).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A quantity grew beyond representable / configured limits (exp overflow,
/// bracket expansion past its cap).
class NumericOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bisection bracket does not enclose a sign change.
class NoSignChangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative routine exhausted its iteration budget.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No plan satisfying all constraints exists for the given inputs.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or scenario input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace v2xmec
