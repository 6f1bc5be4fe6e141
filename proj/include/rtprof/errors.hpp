#pragma once

#include <stdexcept>
#include <string>

namespace rtprof {

// Configuration problems: bad files, invalid fields, infeasible settings.
// The CLI maps these (and std::invalid_argument) to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No valid set of initial limits exists for the requested grid.
class InfeasibleConfiguration : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Malformed input files (trace CSV, points CSV). Messages carry line numbers.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Failures while running a job or a numerical routine. CLI exit code 3.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OracleError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class TraceExhausted : public OracleError {
 public:
  using OracleError::OracleError;
};

class NumericalFailure : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace rtprof
