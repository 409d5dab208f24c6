#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace moedge {

/// Base type for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV rows, trace files, checkpoints on disk).
struct ParseError : Error {
  using Error::Error;
};

/// An argument or configuration value violates a documented precondition.
struct ValidationError : Error {
  using Error::Error;
};

/// A configuration document is structurally invalid (unknown keys, bad types).
struct ConfigError : Error {
  using Error::Error;
};

/// Training failed (non-finite loss); carries the epoch it happened in.
struct TrainingError : Error {
  TrainingError(const std::string& msg, int epoch_index)
      : Error(msg), epoch(epoch_index) {}
  int epoch;
};

/// A required artifact (checkpoint, trace file) is missing or incompatible.
struct ArtifactError : Error {
  using Error::Error;
};

/// A report file does not match the expected schema version.
struct SchemaError : Error {
  using Error::Error;
};

/// Working mode of a moving unit.
enum class Mode { Operational, Transit, Idle };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Operational: return "opt";
    case Mode::Transit: return "tra";
    case Mode::Idle: return "idl";
  }
  return "?";
}

/// Sentinel for "never violated regardless of demand" (excess demand -inf)
/// and "structurally infeasible regardless of demand" (+inf).
inline constexpr double kNeverViolated = -std::numeric_limits<double>::infinity();
inline constexpr double kAlwaysViolated = std::numeric_limits<double>::infinity();

}  // namespace moedge
