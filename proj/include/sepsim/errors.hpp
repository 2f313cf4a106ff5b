#pragma once

#include <stdexcept>
#include <string>

namespace sep {

// Bad input: configs, parameter ranges, support violations. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver / quadrature / certificate failure at runtime. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sep
