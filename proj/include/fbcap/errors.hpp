#pragma once

#include <stdexcept>
#include <string>

namespace fbcap {

// Base of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Problems with user-supplied inputs (bad models, bad parameters).
// The CLI maps these to exit code 1.
struct UserError : Error {
  using Error::Error;
};

struct DimensionMismatch : UserError {
  using UserError::UserError;
};
struct JointNoiseNotPSD : UserError {
  using UserError::UserError;
};
struct Sigma1NotPSD : UserError {
  using UserError::UserError;
};
struct InvalidDelay : UserError {
  using UserError::UserError;
};
struct OutOfRange : UserError {
  using UserError::UserError;
};
struct UnitCircleNoise : UserError {
  using UserError::UserError;
};
struct NotDetectable : UserError {
  using UserError::UserError;
};

// Numerical failures (iteration budgets, singular factors, solver
// breakdowns). The CLI maps these to exit code 2.
struct NumericError : Error {
  using Error::Error;
};

struct NotPositiveDefinite : NumericError {
  using NumericError::NumericError;
};
struct NoConvergence : NumericError {
  using NumericError::NumericError;
};
struct SingularInnovation : NumericError {
  using NumericError::NumericError;
};
struct RiccatiDivergence : NumericError {
  using NumericError::NumericError;
};
struct OrthogonalityViolated : NumericError {
  using NumericError::NumericError;
};
struct SingularOutputCovariance : NumericError {
  using NumericError::NumericError;
};
struct SolverFailure : NumericError {
  using NumericError::NumericError;
};
struct Infeasible : SolverFailure {
  using SolverFailure::SolverFailure;
};
struct MaxIterations : SolverFailure {
  using SolverFailure::SolverFailure;
};
struct NumericalFailure : SolverFailure {
  using SolverFailure::SolverFailure;
};

}  // namespace fbcap
