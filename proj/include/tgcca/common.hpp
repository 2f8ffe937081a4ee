#pragma once

#include <stdexcept>
#include <string>

namespace tgcca {

// Bad user input: malformed config, mismatched dimensions, invalid ranks.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: non-SPD matrices, NaN/Inf criteria, failed Cholesky.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tgcca
