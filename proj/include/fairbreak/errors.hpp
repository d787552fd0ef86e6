#pragma once

#include <stdexcept>
#include <string>

namespace fairbreak {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two distributions do not share the same support (ids/coords/dimension).
struct SupportMismatch : Error {
  using Error::Error;
};

// A transport fraction lies outside [0, 1].
struct InvalidFraction : Error {
  using Error::Error;
};

// Feature dimension of an input does not match the classifier/distribution.
struct DimensionError : Error {
  using Error::Error;
};

// A fairness gap is requested while a conditioning event has zero mass.
struct UndefinedGap : Error {
  using Error::Error;
};

// The bound C(h,·) is requested on all-zero cells.
struct UndefinedBound : Error {
  using Error::Error;
};

// A case-specific transport divisor is zero while its numerator is not.
// Provably impossible for valid inputs; raised defensively.
struct DegenerateCase : Error {
  using Error::Error;
};

// Stage-1 margin outside (0, 1/2].
struct InvalidMargin : Error {
  using Error::Error;
};

// An operation requires a specific transport case that does not hold.
struct CaseNotApplicable : Error {
  using Error::Error;
};

// A flip budget exceeds what the dataset can absorb.
struct BudgetError : Error {
  using Error::Error;
};

// Training reached a non-finite objective value.
struct TrainingDiverged : Error {
  using Error::Error;
};

// No classifier in the searched class satisfies the fairness constraint.
struct Infeasible : Error {
  using Error::Error;
};

// Root finding failed to reach the requested tolerance.
struct NoConvergence : Error {
  using Error::Error;
};

// A brute-force search was asked to handle an instance beyond its size cap.
struct InstanceTooLarge : Error {
  using Error::Error;
};

// A covariance matrix is not symmetric positive definite.
struct SingularCovariance : Error {
  using Error::Error;
};

// Malformed file contents or unparseable values.
struct FileFormatError : Error {
  using Error::Error;
};

// Generic invalid argument not covered by a more specific type.
struct InvalidArgument : Error {
  using Error::Error;
};

}  // namespace fairbreak
