#pragma once

#include <stdexcept>
#include <string>

namespace decap {

// Invalid user input: bad config file, bad model file, bad CLI override.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure while running: I/O trouble, divergence, checkpoint mismatch.
// The CLI maps this to exit code 1.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace decap
