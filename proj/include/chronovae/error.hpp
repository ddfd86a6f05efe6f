#pragma once

#include <stdexcept>
#include <string>

namespace chronovae {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor extents.
struct DimensionError : Error {
  using Error::Error;
};

/// Invalid hyperparameter or operator configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// NaN/Inf encountered, training divergence.
struct NumericError : Error {
  using Error::Error;
};

/// An operation invoked in the wrong phase (e.g. consolidation during eval).
struct ProtocolError : Error {
  using Error::Error;
};

/// Malformed input file; the message carries the line number when known.
struct ParseError : Error {
  using Error::Error;
};

/// Dataset content unusable for the requested operation.
struct DatasetError : Error {
  using Error::Error;
};

}  // namespace chronovae
