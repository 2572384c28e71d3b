#ifndef BIPHOTON_ERRORS_HPP
#define BIPHOTON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace biphoton {

// Bad configuration: unknown preset, inconsistent stage list, invalid grid...
// Mapped to exit code 2 by the command-line tool.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: solver divergence, step-size underflow, bisection that
// cannot bracket.  Mapped to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// File-system / parse problems.  Mapped to exit code 4.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Evaluation outside a model's declared validity window.
struct DomainError : std::domain_error {
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace biphoton

#endif  // BIPHOTON_ERRORS_HPP
