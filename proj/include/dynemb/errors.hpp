#pragma once

#include <stdexcept>
#include <string>

namespace dynemb {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad value passed to an operation (non-finite input, empty dataset, ...).
struct InvalidArgument : Error {
  using Error::Error;
};

// Vector/matrix shape mismatch.
struct DimensionError : Error {
  using Error::Error;
};

// Input file does not match the expected column layout.
struct SchemaError : Error {
  using Error::Error;
};

// Inconsistent run configuration (maps to exit code 2 in the CLI).
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace dynemb
