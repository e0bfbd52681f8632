#pragma once

#include <stdexcept>
#include <string>

namespace latmod {

/// Invalid combination of parameters (family/dimension, dimension mismatch, empty band).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not available for the given lattice (e.g. relevant vectors of D5).
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Argument outside the mathematical domain of the operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input data: shape mismatch, record too short.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Signal that cannot be normalized (identically zero).
class DegenerateSignalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Optimizer produced a non-finite objective.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace latmod
