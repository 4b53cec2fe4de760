#pragma once

#include <stdexcept>
#include <string>

namespace fxh {

/// Malformed or insufficient input data (bad CSV rows, series too short).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: NaN loss, singular design matrix, divergence.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or unknown configuration key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fxh
