#pragma once

#include <stdexcept>
#include <string>

namespace matnet {

/// Bad arguments or configuration. CLI exit code 1.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed, misaligned or out-of-contract input data. CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cholesky failure, non-finite residuals and similar. CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace matnet
