#pragma once

#include <stdexcept>
#include <string>

namespace fmbeam {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor dimensions that do not fit an operation.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape: " + what) {}
};

// Malformed, missing or inconsistent data (files, splits, windows).
class DataError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf appeared in a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fmbeam
