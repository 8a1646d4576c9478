#pragma once

#include <stdexcept>
#include <string>

namespace multibin {

// Raised when a user-supplied configuration is unusable (CLI maps this to exit code 2).
struct config_error : std::invalid_argument {
  explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Raised when a computation produces non-finite or otherwise unusable numbers
// (CLI maps this to exit code 3).
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace multibin
