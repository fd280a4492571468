#pragma once

#include <stdexcept>
#include <string>

namespace pf {

// Shape/dimension mismatches between tensors or layers.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API contract violations (non-scalar loss, empty family, too few samples).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric-domain violations (negative time, non-positive variance).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation not defined for the given variant (density of an empirical
// measure, CDF of a multi-dimensional spec, ...).
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config file parse or validation failure.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value produced where finiteness is required (diverged loss,
// ODE integration hitting NaN velocity).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pf
