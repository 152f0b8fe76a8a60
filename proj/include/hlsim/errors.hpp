#pragma once

#include <stdexcept>
#include <string>

namespace hlsim {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameters (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical failures (maps to CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepFloor : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OverflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotReached : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NoBlowupTrend : public Error {
 public:
  using Error::Error;
};

}  // namespace hlsim
