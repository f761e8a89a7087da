#pragma once

#include <stdexcept>
#include <string>

namespace ppsr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a parameter value was violated (sigma <= 0, bad radius, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration key or value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Iterative solve failed to reach its tolerance, or produced non-finite values.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int iterations = 0, double residual = 0.0)
      : Error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ppsr
