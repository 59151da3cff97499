#pragma once

#include <stdexcept>
#include <string>

namespace ebayes {

/// Input outside the mathematical domain of an operation (non-finite data,
/// a mixing weight outside [0,1], a zero draw count, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A linear operator that is rank deficient, or a structure that does not
/// belong to the registry it was looked up in.
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The request exceeds a hard enumeration/size limit of the implementation.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver failed to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stochastic or quadrature estimate whose diagnostics fell below the
/// configured threshold. The estimate is still carried so callers can decide.
class PrecisionError : public std::runtime_error {
 public:
  PrecisionError(const std::string& what, double estimate, double se)
      : std::runtime_error(what), estimate_(estimate), se_(se) {}

  double estimate() const noexcept { return estimate_; }
  double se() const noexcept { return se_; }

 private:
  double estimate_;
  double se_;
};

}  // namespace ebayes
