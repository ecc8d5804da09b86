#pragma once

#include <stdexcept>
#include <string>

namespace nilwalk {

/// Checked integer arithmetic left the representable range.
class arithmetic_overflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Arguments outside the numeric domain of a routine (singular covariance,
/// non-positive pivot, degenerate eigenvalue).
class numeric_domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A memory or enumeration budget would be exceeded. Raised before any
/// large allocation happens.
class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (mismatched dimensions, short words, bad
/// measure).
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Adaptive quadrature failed to reach its tolerance.
class quadrature_error : public std::runtime_error {
 public:
  quadrature_error(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what + " (estimate " + std::to_string(estimate) +
                           ", error bound " + std::to_string(error_bound) + ")"),
        estimate_(estimate),
        error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

}  // namespace nilwalk
