#pragma once

#include <stdexcept>
#include <string>

namespace jumps {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data: shapes, files, masks, topologies.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values (rejected at validation time).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values appeared during an optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace jumps
