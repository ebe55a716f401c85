#pragma once

#include <stdexcept>
#include <string>

namespace beamopt {

// Invalid input or configuration (bad geometry, parameters out of range,
// malformed scenario). Maps to CLI exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Adaptive quadrature failed to reach its tolerance. Carries the best
// estimate and the achieved error bound.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

// Optimizer could not continue (non-finite objective at the start point).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace beamopt
