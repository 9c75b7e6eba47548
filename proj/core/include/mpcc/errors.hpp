#pragma once

#include <stdexcept>
#include <string>

namespace mpcc {

/// Caller broke an interface contract (dimension mismatch, bad parameter).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A point violates the feasibility preconditions of an operation.
struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A data file could not be parsed; the message carries the line number.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mpcc
