#pragma once

#include <optional>
#include <span>
#include <vector>

#include "impc/cbf.hpp"
#include "impc/cftoc.hpp"
#include "impc/dynamics.hpp"
#include "impc/qp_solver.hpp"
#include "impc/trajectory.hpp"

namespace impc {

/// Stopping rule for the per-step linearize/solve loop: stop once
/// e_abs < eps_abs or e_rel < eps_rel, or after j_max solves.
struct ConvergenceConfig {
  double eps_abs = 1e-4;
  double eps_rel = 1e-2;
  int j_max = 1000;

  void validate() const;
};

struct ConvergenceError {
  double abs = 0.0;
  double rel = 0.0;
};

/// e_abs = |X - X_prev| over the stacked states, e_rel = e_abs / |X_prev|
/// (+inf when X_prev is all zeros).
ConvergenceError convergence_error(std::span<const StateVec> states,
                                   std::span<const StateVec> previous);

/// Everything the controller needs besides the current state.
struct MpcConfig {
  Model model;
  CbfSpec cbf;
  CostWeights weights;
  Bounds bounds;
  ConvergenceConfig convergence;
  int horizon = 24;
  QpSettings qp;

  void validate() const;
};

struct SolveReport {
  int t = 0;
  int iterations = 0;  ///< CFTOC solves used (j_conv), >= 1 when feasible
  bool converged = false;
  bool feasible = false;
  double e_abs = 0.0;
  double e_rel = 0.0;
  double wall_time = 0.0;  ///< seconds, whole step
  double h_min = 0.0;      ///< min over obstacles of h at the step's state
  double min_slack = 0.0;  ///< smallest optimized slack (+inf without rows)
};

struct StepResult {
  std::optional<InputVec> u_apply;  ///< empty when infeasible
  Trajectory solution;              ///< X*, U* of the final iterate
  SolveReport report;
};

/// Iterates linearize -> assemble -> solve around the warm start until the
/// optimized state trajectory stops changing. Never throws for an infeasible
/// step; infeasibility is reported through `report.feasible`.
StepResult impc_step(const MpcConfig& config, const StateVec& x_now,
                     const Trajectory& warm_start);

/// Zero inputs propagated from x0.
Trajectory zero_warm_start(const Model& model, const StateVec& x0, int horizon);

/// Shifts U* one step left, repeats its last entry, and propagates from x_next.
Trajectory warm_start_next(std::span<const InputVec> optimal_inputs,
                           const Model& model, const StateVec& x_next);

/// Smallest barrier value over all obstacles at a state (+inf without obstacles).
double min_clearance(const CbfSpec& cbf, const StateVec& x);

struct Scenario {
  MpcConfig mpc;
  StateVec initial_state;
  int t_sim = 100;

  void validate() const;
};

struct ClosedLoopResult {
  std::vector<StateVec> states;  ///< x(0) .. x(T)
  std::vector<InputVec> inputs;  ///< applied inputs, one per completed step
  std::vector<SolveReport> reports;  ///< one per attempted step
  bool completed = false;  ///< all t_sim steps were feasible

  int completed_steps() const noexcept { return static_cast<int>(inputs.size()); }
};

/// Receding-horizon simulation from the scenario's initial state. Stops early
/// at the first infeasible step; that step's report is the last entry.
/// Throws ConfigError when the initial state is inside an obstacle.
ClosedLoopResult closed_loop(const Scenario& scenario);

}  // namespace impc
