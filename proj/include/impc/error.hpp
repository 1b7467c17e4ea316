#pragma once

#include <stdexcept>
#include <string>

namespace impc {

/// Caller violated an API precondition (dimension mismatch, malformed input).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration value is invalid. `key()` names the offending entry
/// (dotted JSON path, e.g. "mpc.gammas").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The current MPC step cannot be solved: the QP is infeasible, did not reach
/// a feasible point, or a barrier could not be linearized.
class StepInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Projection onto an obstacle boundary from (numerically) its center.
class DegenerateProjection : public StepInfeasible {
 public:
  using StepInfeasible::StepInfeasible;
};

}  // namespace impc
