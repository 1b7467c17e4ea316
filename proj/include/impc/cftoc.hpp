#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "impc/cbf.hpp"
#include "impc/dynamics.hpp"
#include "impc/qp_solver.hpp"
#include "impc/trajectory.hpp"

namespace impc {

/// Quadratic tracking weights:
///   |x_N - x_ref|^2_P + sum_k |x_k - x_ref|^2_Q + |u_k - u_ref|^2_R
///                         + |omega_k - omega_ref|^2_S
/// where omega_k stacks the slacks of all barrier orders at step k.
struct CostWeights {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd S;       ///< m_cbf x m_cbf
  Eigen::MatrixXd P_term;
  StateVec x_ref;
  InputVec u_ref;
  Eigen::VectorXd omega_ref;  ///< one entry per barrier order

  /// Throws ConfigError for wrong shapes or non-PSD weights.
  void validate(int state_dim, int input_dim, int barrier_order) const;
};

struct Bounds {
  StateVec x_min;
  StateVec x_max;
  InputVec u_min;
  InputVec u_max;

  /// Throws ConfigError for wrong shapes or min > max.
  void validate(int state_dim, int input_dim) const;
};

/// Index map of the stacked decision vector
///   z = [x_0 .. x_N | u_0 .. u_{N-1} | omega_0 .. omega_{R-1}]
/// with one slack per barrier row.
class CftocLayout {
 public:
  CftocLayout(int horizon, int state_dim, int input_dim, int num_slacks);

  int horizon() const noexcept { return horizon_; }
  int state_dim() const noexcept { return state_dim_; }
  int input_dim() const noexcept { return input_dim_; }
  int num_slacks() const noexcept { return num_slacks_; }

  int state_index(int step, int component) const {
    return step * state_dim_ + component;
  }
  int input_index(int step, int component) const {
    return input_offset_ + step * input_dim_ + component;
  }
  int slack_index(int row) const { return slack_offset_ + row; }
  int num_variables() const noexcept { return slack_offset_ + num_slacks_; }

  /// Stack blocks into a decision vector (inverse of the unpack slicing).
  Eigen::VectorXd stack(std::span<const StateVec> states,
                        std::span<const InputVec> inputs,
                        std::span<const double> slacks) const;

 private:
  int horizon_;
  int state_dim_;
  int input_dim_;
  int num_slacks_;
  int input_offset_;
  int slack_offset_;
};

/// Constraint row blocks of the assembled QP, in order.
struct CftocRowBlocks {
  int initial = 0;   ///< x_0 = x_now
  int dynamics = 0;  ///< linearized dynamics equalities
  int state_box = 0; ///< x_1 .. x_N bounds
  int input_box = 0; ///< u_0 .. u_{N-1} bounds
  int barrier = 0;   ///< one-sided barrier rows
  int total = 0;
};

struct CftocProblem {
  QpProblem qp;
  CftocLayout layout;
  CftocRowBlocks blocks;
  double objective_constant = 0.0;  ///< cost = qp objective + this
};

/// Builds the per-iteration convex problem. `lin[k]` linearizes the dynamics
/// around (nominal.states[k], nominal.inputs[k]); `rows` come from hocbf_rows
/// on the same nominal trajectory. The slack of row r is penalized together
/// with the other orders of the same (obstacle, step).
///
/// Throws UsageError on dimension mismatches or when x_now differs from
/// nominal.states[0].
CftocProblem assemble(const StateVec& x_now, const Trajectory& nominal,
                      std::span<const LinearizedDynamics> lin,
                      std::span<const HocbfRow> rows,
                      const CostWeights& weights, const Bounds& bounds);

struct CftocSolution {
  std::vector<StateVec> states;
  std::vector<InputVec> inputs;
  std::vector<double> slacks;
  double objective = 0.0;
  QpStatus status = QpStatus::Solved;
};

/// Slices a solved QP into states, inputs and slacks. Throws StepInfeasible
/// unless the QP status is Solved.
CftocSolution unpack(const QpSolution& solution, const CftocProblem& problem);

/// Slicing only, without a status check.
CftocSolution unpack(const Eigen::VectorXd& z, const CftocLayout& layout);

}  // namespace impc
