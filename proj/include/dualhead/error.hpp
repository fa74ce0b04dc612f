#pragma once

#include <stdexcept>
#include <string>

namespace dualhead {

// Root of every error thrown by the library. Subclasses let callers (and the
// CLI's exit-code mapping) tell usage, data and verification failures apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf observed in a forward or backward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidProbability : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class TapeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace dualhead
