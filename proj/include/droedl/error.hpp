#pragma once

#include <stdexcept>
#include <string>

namespace droedl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A quantile was requested at level 0, where it is -infinity.
class DegenerateQuantile : public DomainError {
  public:
    using DomainError::DomainError;
};

/// A root-finder or quadrature did not reach its tolerance.
class NumericalFailure : public Error {
  public:
    using Error::Error;
};

class InsufficientSamples : public Error {
  public:
    using Error::Error;
};

/// Shape parameter outside the range covered by a lookup table.
class TableRangeError : public Error {
  public:
    using Error::Error;
};

/// File missing, unreadable, unwritable or malformed.
class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace droedl
