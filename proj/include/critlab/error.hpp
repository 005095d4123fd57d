#pragma once

#include <stdexcept>
#include <string>

namespace critlab {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: non-finite numbers, inadmissible parameters, mismatched grids.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The shooting classification never changed sign over the search range.
class BracketNotFound : public Error {
 public:
  using Error::Error;
};

/// Step-size underflow or a non-finite state in the ODE integrator.
class IntegratorFailure : public Error {
 public:
  using Error::Error;
};

/// Newton, eigen or linear solver failures, and spectral pictures that
/// contradict a stated precondition.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Configuration validation failure; carries the offending key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace critlab
