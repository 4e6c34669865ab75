#pragma once

#include <stdexcept>
#include <string>

namespace capsense {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or degenerate scene geometry (overlap, missing defect, bad radius).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or arguments (dimension mismatch, bad index, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written, or its contents are malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A series expansion was requested outside its convergence region.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace capsense
