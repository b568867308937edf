#pragma once

#include <stdexcept>
#include <string>

namespace tod {

// Error taxonomy shared by every module. The CLI maps these onto exit codes
// (config/argument -> 2, I/O -> 3, missing artifact -> 4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration: bad spec, mismatched heads, bad fractions.
struct ConfigError : Error {
    using Error::Error;
};

// Dimension mismatch between a network and its input.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid call argument (empty batch, zero budget, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Index outside the valid range of a dataset or pool.
struct RangeError : Error {
    using Error::Error;
};

// NaN/Inf where finite arithmetic is required.
struct NumericError : Error {
    using Error::Error;
};

// Malformed file content; message carries the offending location.
struct ParseError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Requested artifact (snapshot, run output) does not exist.
struct MissingArtifactError : Error {
    using Error::Error;
};

}  // namespace tod
