#pragma once

#include <stdexcept>
#include <string>

namespace trustbeta {

// Process exit codes used by the CLI. Each error family maps to one code.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfig = 2,
  kSchema = 3,
  kTrainingDivergence = 4,
  kOptimization = 5,
  kNumerical = 6,
  kIo = 7,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const { return ExitCode::kUsage; }
};

// Argument outside an operation's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kConfig; }
};

// A file failed to parse or did not match the versioned schema.
class SchemaError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kSchema; }
};

class NumericalError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kNumerical; }
};

class TrainingError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override {
    return ExitCode::kTrainingDivergence;
  }
};

class OptimizationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kOptimization; }
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kIo; }
};

}  // namespace trustbeta
