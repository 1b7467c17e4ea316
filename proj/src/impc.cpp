#include "impc/impc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "impc/error.hpp"

namespace impc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A QP that stopped at max_iter is still usable when its primal iterate
// satisfies the constraints to this tolerance.
constexpr double kMaxIterFeasibilityTol = 1e-5;

}  // namespace

void ConvergenceConfig::validate() const {
  if (!(eps_abs > 0.0)) {
    throw ConfigError("convergence.eps_abs", "must be positive");
  }
  if (!(eps_rel > 0.0)) {
    throw ConfigError("convergence.eps_rel", "must be positive");
  }
  if (j_max < 1) {
    throw ConfigError("convergence.j_max", "must be >= 1");
  }
}

ConvergenceError convergence_error(std::span<const StateVec> states,
                                   std::span<const StateVec> previous) {
  if (states.size() != previous.size()) {
    throw UsageError("convergence_error: trajectories differ in length");
  }
  double diff_sq = 0.0;
  double prev_sq = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    diff_sq += (states[k] - previous[k]).squaredNorm();
    prev_sq += previous[k].squaredNorm();
  }
  ConvergenceError err;
  err.abs = std::sqrt(diff_sq);
  err.rel = prev_sq > 0.0 ? err.abs / std::sqrt(prev_sq) : kInf;
  return err;
}

void MpcConfig::validate() const {
  if (horizon < 1) {
    throw ConfigError("mpc.N", "horizon must be >= 1");
  }
  cbf.validate();
  weights.validate(model.state_dim(), model.input_dim(), cbf.order);
  bounds.validate(model.state_dim(), model.input_dim());
  convergence.validate();
  qp.validate();
}

double min_clearance(const CbfSpec& cbf, const StateVec& x) {
  double h = kInf;
  const Eigen::Vector2d p = cbf.position.of(x);
  for (const auto& obstacle : cbf.obstacles) {
    h = std::min(h, obstacle.clearance(p));
  }
  return h;
}

Trajectory zero_warm_start(const Model& model, const StateVec& x0, int horizon) {
  Trajectory warm;
  warm.inputs.assign(horizon, InputVec::Zero(model.input_dim()));
  warm.states = propagate(model, x0, warm.inputs);
  return warm;
}

Trajectory warm_start_next(std::span<const InputVec> optimal_inputs,
                           const Model& model, const StateVec& x_next) {
  if (optimal_inputs.empty()) {
    throw UsageError("warm_start_next: empty input sequence");
  }
  Trajectory warm;
  warm.inputs.assign(optimal_inputs.begin() + 1, optimal_inputs.end());
  warm.inputs.push_back(optimal_inputs.back());
  warm.states = propagate(model, x_next, warm.inputs);
  return warm;
}

StepResult impc_step(const MpcConfig& config, const StateVec& x_now,
                     const Trajectory& warm_start) {
  const auto start = std::chrono::steady_clock::now();
  const int N = config.horizon;
  if (!warm_start.consistent() || warm_start.horizon() != N) {
    throw UsageError("impc_step: warm start does not match the horizon");
  }
  if (x_now.size() != config.model.state_dim()) {
    throw UsageError("impc_step: state dimension mismatch");
  }

  StepResult result;
  SolveReport& report = result.report;
  report.h_min = min_clearance(config.cbf, x_now);
  report.min_slack = kInf;

  Trajectory nominal = warm_start;
  nominal.states.front() = x_now;

  QpSolver solver(config.qp);
  std::optional<QpWarmStart> qp_warm;
  std::vector<LinearizedDynamics> lin(N);

  auto finish = [&] {
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return std::move(result);
  };

  for (int j = 1; j <= config.convergence.j_max; ++j) {
    report.iterations = j;
    for (int k = 0; k < N; ++k) {
      lin[k] = linearize(config.model, nominal.states[k], nominal.inputs[k]);
    }

    CftocSolution step_solution;
    try {
      const auto rows = hocbf_rows(nominal.states, config.cbf);
      const auto problem = assemble(x_now, nominal, lin, rows, config.weights,
                                    config.bounds);
      const QpSolution qp = solver.solve(
          problem.qp, qp_warm.has_value() ? &*qp_warm : nullptr);
      if (qp.status == QpStatus::MaxIter &&
          qp.primal_residual <= kMaxIterFeasibilityTol) {
        step_solution = unpack(qp.z, problem.layout);
      } else {
        step_solution = unpack(qp, problem);
      }
      qp_warm = QpWarmStart{qp.z, qp.y};
    } catch (const StepInfeasible&) {
      report.feasible = false;
      report.converged = false;
      return finish();
    }

    const auto err = convergence_error(step_solution.states, nominal.states);
    report.e_abs = err.abs;
    report.e_rel = err.rel;
    report.min_slack = kInf;
    for (double w : step_solution.slacks) {
      report.min_slack = std::min(report.min_slack, w);
    }

    nominal.states = std::move(step_solution.states);
    nominal.states.front() = x_now;
    nominal.inputs = std::move(step_solution.inputs);

    if (err.abs < config.convergence.eps_abs ||
        err.rel < config.convergence.eps_rel) {
      report.converged = true;
      break;
    }
  }

  report.feasible = true;
  result.u_apply = nominal.inputs.front();
  result.solution = std::move(nominal);
  return finish();
}

void Scenario::validate() const {
  mpc.validate();
  if (initial_state.size() != mpc.model.state_dim()) {
    throw ConfigError("initial_state", "dimension does not match the model");
  }
  if (!initial_state.allFinite()) {
    throw ConfigError("initial_state", "must be finite");
  }
  if (t_sim < 0) {
    throw ConfigError("t_sim", "must be >= 0");
  }
  if (!(min_clearance(mpc.cbf, initial_state) > 0.0)) {
    throw ConfigError("initial_state",
                      "unsafe initial state: h(x0) <= 0 (inside or on an obstacle)");
  }
}

ClosedLoopResult closed_loop(const Scenario& scenario) {
  scenario.validate();
  const auto& mpc = scenario.mpc;

  ClosedLoopResult out;
  out.states.push_back(scenario.initial_state);
  Trajectory warm =
      zero_warm_start(mpc.model, scenario.initial_state, mpc.horizon);

  for (int t = 0; t < scenario.t_sim; ++t) {
    const StateVec& x = out.states.back();
    StepResult step = impc_step(mpc, x, warm);
    step.report.t = t;
    out.reports.push_back(step.report);
    if (!step.u_apply) {
      return out;
    }
    const InputVec u = *step.u_apply;
    StateVec x_next = mpc.model.step(x, u);
    warm = warm_start_next(step.solution.inputs, mpc.model, x_next);
    out.inputs.push_back(u);
    out.states.push_back(std::move(x_next));
  }
  out.completed = true;
  return out;
}

}  // namespace impc
