#pragma once

#include <stdexcept>
#include <string>

namespace atomreg {

/// Invalid parameters or inputs. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure that is not the caller's fault (e.g. a fit that cannot be evaluated).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace atomreg
