#pragma once

#include <stdexcept>
#include <string>

namespace scorefuse {

/// Broad failure class; the CLI maps it to an exit code.
enum class ErrorCategory { usage, data, training };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ErrorCategory category() const noexcept { return ErrorCategory::usage; }
};

// Usage / configuration problems (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};
class ShapeError : public UsageError {
 public:
  using UsageError::UsageError;
};
class FusionError : public UsageError {
 public:
  using UsageError::UsageError;
};
class MetricError : public UsageError {
 public:
  using UsageError::UsageError;
};
class IoError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Problems with the input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
  ErrorCategory category() const noexcept override { return ErrorCategory::data; }
};
class ParseError : public DataError {
 public:
  using DataError::DataError;
};
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};
class SummaryError : public DataError {
 public:
  using DataError::DataError;
};
class ImputationError : public DataError {
 public:
  using DataError::DataError;
};
class ResampleError : public DataError {
 public:
  using DataError::DataError;
};

// Training failures (exit code 3).
class TrainingError : public Error {
 public:
  using Error::Error;
  ErrorCategory category() const noexcept override { return ErrorCategory::training; }
};
class DivergenceError : public TrainingError {
 public:
  using TrainingError::TrainingError;
};

/// An error raised inside a pipeline stage, tagged with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error("stage '" + stage + "': " + cause.what()),
        stage_(std::move(stage)),
        category_(cause.category()) {}

  const std::string& stage() const noexcept { return stage_; }
  ErrorCategory category() const noexcept override { return category_; }

 private:
  std::string stage_;
  ErrorCategory category_;
};

inline int exit_code(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::usage: return 1;
    case ErrorCategory::data: return 2;
    case ErrorCategory::training: return 3;
  }
  return 1;
}

}  // namespace scorefuse
