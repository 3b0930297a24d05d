#pragma once

#include <stdexcept>
#include <string>

namespace dlc {

/// Invalid configuration or arguments (CLI maps this to exit code 2).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numeric failure during evaluation (CLI maps this to exit code 3).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape mismatch at a tape primitive; message names the node.
struct ShapeError : NumericError {
    using NumericError::NumericError;
};

/// Non-finite value produced at a tape primitive; message names the node.
struct NonFiniteError : NumericError {
    using NumericError::NumericError;
};

/// Tape misuse (backward twice, reading grads before backward, ...).
struct TapeUsageError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Geometry too degenerate for a rigid fit (rank-deficient covariance).
struct DegenerateGeometryError : NumericError {
    using NumericError::NumericError;
};

/// Checkpoint file damaged or wrong version.
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dlc
