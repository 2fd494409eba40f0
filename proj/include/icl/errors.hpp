#pragma once

#include <stdexcept>
#include <string>

namespace icl {

// Bad inputs: configs, dimensions, preconditions. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values, failed solves, inconclusive estimates. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace icl
