#pragma once

#include <stdexcept>
#include <string>

namespace cansig {

/// Base of all library errors. The three direct subclasses map onto the
/// CLI exit codes: ConfigError -> 2, DataError -> 3, ArtifactError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct ArtifactError : Error {
  using Error::Error;
};

// ingest
struct InconsistentId : DataError {
  using DataError::DataError;
};
struct CardinalityMismatch : DataError {
  using DataError::DataError;
};
struct EmptyStream : DataError {
  using DataError::DataError;
};
struct AttackInTraining : DataError {
  using DataError::DataError;
};

// preprocess
struct DegenerateInput : DataError {
  using DataError::DataError;
};
struct BudgetTooSmall : ConfigError {
  using ConfigError::ConfigError;
};
struct UnseenSignal : DataError {
  using DataError::DataError;
};
struct QueueTooShallow : ConfigError {
  using ConfigError::ConfigError;
};

// model
struct ShapeUnderflow : ConfigError {
  using ConfigError::ConfigError;
};
struct ShapeMismatch : DataError {
  using DataError::DataError;
};
struct NonFiniteLoss : Error {
  NonFiniteLoss(const std::string& what, int epoch_index)
      : Error(what), epoch(epoch_index) {}
  int epoch;
};

// detect
struct InsufficientData : DataError {
  using DataError::DataError;
};
struct EmptyScores : DataError {
  using DataError::DataError;
};

// attackgen
struct CyclicCorrelation : ConfigError {
  using ConfigError::ConfigError;
};
struct IntervalOutOfRange : ConfigError {
  using ConfigError::ConfigError;
};
struct PlaybackSourceOverlap : ConfigError {
  using ConfigError::ConfigError;
};

// eval
struct SingleClass : DataError {
  using DataError::DataError;
};
struct Unattainable : DataError {
  using DataError::DataError;
};
struct MissingArtifacts : DataError {
  using DataError::DataError;
};

// persisted artifacts
struct MissingArtifact : ArtifactError {
  using ArtifactError::ArtifactError;
};
struct ArtifactMismatch : ArtifactError {
  using ArtifactError::ArtifactError;
};

}  // namespace cansig
