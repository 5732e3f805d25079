#pragma once

#include <stdexcept>
#include <string>

namespace fedin {

// Error taxonomy. The CLI maps these onto exit codes (config 1, data 2, numeric 3).

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or unwritable file. Reported with the data exit code.
class IoError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedin
