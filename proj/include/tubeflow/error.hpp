#pragma once

#include <stdexcept>

namespace tubeflow {

// Error kinds thrown across the library. Everything derives from
// std::runtime_error so callers can catch broadly or by category.

// Invalid configuration value (flag, generator config, model parameter).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text; the message names the line and field.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operation was applied to state it does not fit (wrong sensor, stale
// delta, empty window where one is required, ...).
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Timestamp ordering contract violated.
struct OrderingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank or index range outside the container.
struct BoundsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A tube-op failed inside a run; the message names the tube and event.
struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tubeflow
