#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace erpdepth {

// Shapes, grids and parameter blocks that do not fit together.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value outside the mathematical domain of an operation (d <= 0, zero
// vector, sigma outside [0,1], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Reprojected point coincides with the source camera center.
class DegeneratePointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero-mean disparity and similar inputs for which a loss is undefined.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Empty evaluation set.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}

  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace erpdepth
