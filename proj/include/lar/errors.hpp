#pragma once

#include <stdexcept>
#include <string>

namespace lar {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: wrong dimensions, out-of-range index, non-PD covariance.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Configuration files, presets and schema violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical failures. The CLI maps every subclass to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateWeightError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateGeometryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficiencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RegistrationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ResourceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace lar
