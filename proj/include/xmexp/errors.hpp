#pragma once

#include <stdexcept>
#include <string>

namespace xmexp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad dimensions, bad config keys/values, incompatible checkpoints.
struct ConfigError : Error {
  using Error::Error;
};

// API misuse: wrong modality tag, empty presence mask, out-of-range unit.
struct UsageError : Error {
  using Error::Error;
};

// Operation called in the wrong order, e.g. sgd_step before backward.
struct StateError : Error {
  using Error::Error;
};

// Malformed input data: WAV/PPM/manifest parse failures.
struct InputError : Error {
  using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
  using Error::Error;
};

}  // namespace xmexp
