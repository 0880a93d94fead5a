#pragma once

#include <stdexcept>
#include <string>

namespace marlsched {

// Invalid or inconsistent user-supplied configuration. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A precondition of an internal operation was violated. CLI maps this to exit code 3.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Non-finite loss or gradient during training. CLI maps this to exit code 3.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace marlsched
