#pragma once

#include <stdexcept>
#include <string>

namespace ictsurf {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of an operation (log of a non-positive
/// number, negative time, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong order (backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed user input: bad files, bad labels, bad configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

/// NaN/inf encountered during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A metric has no defined value for the given data (no comparable pairs,
/// vanishing censoring weights).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace ictsurf
