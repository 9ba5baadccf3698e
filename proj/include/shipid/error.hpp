#pragma once

#include <stdexcept>
#include <string>

namespace shipid {

// Base of all library errors. The CLI maps each subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, parameters, or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, inconsistent, or insufficient input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// A simulation, loss, or gradient produced a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace shipid
