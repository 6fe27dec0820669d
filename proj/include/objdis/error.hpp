#pragma once

#include <stdexcept>
#include <string>

namespace objdis {

/// Bad arguments to an operation (out-of-range pixel, mismatched resolution, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scene or dataset generation gave up after its retry budget.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An API was used outside its contract, e.g. stepping a finished episode.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace objdis
