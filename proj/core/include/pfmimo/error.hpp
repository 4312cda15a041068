#pragma once

#include <stdexcept>
#include <string>

namespace pfmimo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside the domain of a formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A scenario or configuration violates a structural invariant.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A flow cannot receive a positive rate under any pattern distribution.
class InfeasibleFlowError : public Error {
 public:
  InfeasibleFlowError(std::string flow, const std::string& detail)
      : Error("flow '" + flow + "' is infeasible: " + detail), flow_(std::move(flow)) {}

  const std::string& flow() const noexcept { return flow_; }

 private:
  std::string flow_;
};

/// An iterative method hit its iteration cap before meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// The pattern matrix lacks full column rank.
class UnsupportedStructureError : public Error {
 public:
  using Error::Error;
};

/// Multipliers admit no non-negative pattern distribution.
class InconsistentMultipliersError : public Error {
 public:
  using Error::Error;
};

/// Two or more stations transmit with probability one, so per-station
/// collision probabilities are undefined.
class DegenerateSaturationError : public Error {
 public:
  using Error::Error;
};

/// A pattern asks for more spatial streams than the transmitter has antennas.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace pfmimo
