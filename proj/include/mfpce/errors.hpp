#pragma once

#include <stdexcept>
#include <string>

namespace mfpce {

/// Invalid or inconsistent study configuration (CLI exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model could not be evaluated at a node (CLI exit status 3).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerically degenerate input, e.g. a zero-variance expansion (CLI exit status 4).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal numerical routine failed to converge. Signals a defect, not a user error.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfpce
