#pragma once

#include <stdexcept>
#include <string>

namespace ietagc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or violated call preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mismatched dimensions between vectors, models, banks or datasets.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (e.g. covariance square root residual out of tolerance).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient encountered during training.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, int epoch, int batch)
      : Error(what), epoch(epoch), batch(batch) {}
  int epoch = -1;
  int batch = -1;
  /// Filled by callers that track periodic checkpoints.
  std::string last_checkpoint;
};

}  // namespace ietagc
