#pragma once

#include <stdexcept>
#include <string>

namespace ddhinf {

/// Malformed or dimensionally inconsistent input data.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// API misuse: missing objective, unassigned variable, duplicate setup call.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// A matrix required to be positive definite (or invertible) is not.
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mathematical precondition violated (e.g. unstable matrix where a stable one is required).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Collected data is not informative enough (rank deficient, too few samples).
struct InformativityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented operation precondition does not hold.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A solution failed posterior certification checks.
struct CertificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The synthesis program is infeasible where feasibility is required.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ddhinf
