#pragma once

#include <stdexcept>
#include <string>

namespace qhydro {

/// Raised when an argument falls outside an operation's contract.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure fails (non-convergence, norm drift, ...).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qhydro
