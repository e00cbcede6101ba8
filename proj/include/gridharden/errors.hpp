#pragma once

#include <stdexcept>
#include <string>

namespace gridharden {

// Bad input data or configuration. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A solver failed on input that passed validation. The CLI maps this to
// exit code 1.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gridharden
