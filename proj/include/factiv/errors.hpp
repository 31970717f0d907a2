#pragma once

#include <stdexcept>
#include <string>

namespace factiv {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (bad CSV cell, non-binary indicator,
// missing column, empty input).
struct SchemaError : Error {
  using Error::Error;
};

// An estimand referenced an instrument cell with no mass.
struct MissingCellError : Error {
  using Error::Error;
};

// First-stage contrast too close to zero to divide by.
struct WeakFirstStageError : Error {
  WeakFirstStageError(const std::string& what, double denominator)
      : Error(what), denominator(denominator) {}
  double denominator;
};

// A requested quantity is not identified from the supplied moments
// (zero complier share, undefined conditional mean with positive mass, ...).
struct IdentificationError : Error {
  using Error::Error;
};

// A compliance-type restriction contradicts the observed takeup moments.
struct RestrictionError : Error {
  using Error::Error;
};

// Invalid synthetic-population specification.
struct SpecError : Error {
  using Error::Error;
};

// An operation was invoked on inputs that violate its stated preconditions
// (e.g. verifying a theorem on a population mode it does not cover).
struct PreconditionError : Error {
  using Error::Error;
};

}  // namespace factiv
