#pragma once

#include <stdexcept>
#include <string>

namespace advsticker {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files (PPM headers, weight dumps, ...).
struct ParseError : Error {
  using Error::Error;
};

// Filesystem / stream failures.
struct IoError : Error {
  using Error::Error;
};

// Dimension or domain mismatches between buffers.
struct ShapeError : Error {
  using Error::Error;
};

// NaN or other numerical breakdown detected at a contract boundary.
struct NumericError : Error {
  using Error::Error;
};

// Bad run configuration (unknown key, invalid value, missing input).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace advsticker
