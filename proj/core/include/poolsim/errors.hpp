#pragma once

#include <stdexcept>

namespace poolsim {

// Argument outside the mathematical domain of an operation (|rho| > 1,
// p outside [0, 1], a vanishing denominator, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid parameter set, grid, sample count or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A valid parameter set that a particular estimator does not handle,
// e.g. tranche pricing with rho_x <= 0.
class UnsupportedConfiguration : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace poolsim
