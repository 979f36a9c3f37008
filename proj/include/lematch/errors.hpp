#pragma once

#include <stdexcept>

namespace lematch {

// Invalid configuration values. CLI exit code 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent inputs: files, lesion tables, grids. CLI exit code 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdown inside the solver. CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Synthetic case could not be realized within the retry budget. CLI exit code 2.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lematch
