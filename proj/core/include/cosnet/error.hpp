#pragma once

#include <stdexcept>
#include <string>

namespace cosnet {

// Base class for every error the library raises deliberately.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor extents disagree with what an operation requires.
struct ShapeError : Error {
  using Error::Error;
};

// An operation's output geometry would be empty or otherwise impossible
// (non-positive convolution output, pooling kernel larger than the input).
struct GeometryError : Error {
  using Error::Error;
};

// A NaN or Inf appeared where the engine guarantees finite values.
struct NumericError : Error {
  using Error::Error;
};

// Invalid argument values: labels out of range, contradictory configuration,
// misuse of the tape, bad hyperparameters.
struct ValueError : Error {
  using Error::Error;
};

// File level problems. Concrete subclasses keep the failure modes distinct.
struct IoError : Error {
  using Error::Error;
};

// Malformed or truncated file content.
struct DecodeError : IoError {
  using IoError::IoError;
};

// Stored checksum does not match the bytes read.
struct CrcError : IoError {
  using IoError::IoError;
};

// File format version not understood by this build.
struct VersionError : IoError {
  using IoError::IoError;
};

// Checkpoint was produced for a different model configuration.
struct ConfigMismatchError : IoError {
  using IoError::IoError;
};

}  // namespace cosnet
