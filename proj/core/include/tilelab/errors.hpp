#pragma once

#include <stdexcept>
#include <string>

namespace tilelab {

// Base of every error the library throws. The CLI maps the subclasses onto
// exit codes, so new error kinds should derive from one of these four.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad rule data, invalid measure, inconsistent dimensions.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// The requested operation needs data the family does not carry (e.g. geometry
// of a matrix-only rule).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

// Numerical failures: no spectral gap, eigensolver failure, degenerate fits.
class NumericError : public Error {
 public:
  using Error::Error;
};

class MinimalityError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

class InsufficientData : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace tilelab
