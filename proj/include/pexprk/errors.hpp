#pragma once

#include <stdexcept>
#include <string>

namespace pexprk {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (non-finite input).
struct DomainError : Error {
  using Error::Error;
};

/// A caller broke a precondition: dimension mismatch, bad permutation, malformed tableau.
struct ContractViolation : Error {
  using Error::Error;
};

/// Numerical evaluation produced a non-finite or otherwise unusable result.
struct EvaluationFailure : Error {
  using Error::Error;
};

/// Krylov iteration failed to converge or broke down with NaNs.
struct KrylovFailure : EvaluationFailure {
  using EvaluationFailure::EvaluationFailure;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace pexprk
