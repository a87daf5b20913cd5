// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace ssinn {

// Bad user input: malformed config, unreadable file, inconsistent shapes
// in external data. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at run time: non-finite intermediates, diverging loss,
// exhausted tape. CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ssinn
