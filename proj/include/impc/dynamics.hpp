#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace impc {

using StateVec = Eigen::VectorXd;
using InputVec = Eigen::VectorXd;

struct Jacobians {
  Eigen::MatrixXd A;  ///< d f / d x, state_dim x state_dim
  Eigen::MatrixXd B;  ///< d f / d u, state_dim x input_dim
};

/// Discrete-time model x_{t+1} = f(x_t, u_t) with a fixed sampling period.
///
/// When no Jacobian callback is supplied, Jacobians are computed with central
/// finite differences (perturbation `kFiniteDifferenceStep`).
class Model {
 public:
  using StepFn = std::function<StateVec(const StateVec&, const InputVec&)>;
  using JacobianFn = std::function<Jacobians(const StateVec&, const InputVec&)>;

  static constexpr double kFiniteDifferenceStep = 1e-6;

  Model(int state_dim, int input_dim, double dt, StepFn step,
        JacobianFn jacobians = {});

  int state_dim() const noexcept { return state_dim_; }
  int input_dim() const noexcept { return input_dim_; }
  double dt() const noexcept { return dt_; }

  /// f(x, u). Throws UsageError on dimension mismatch.
  StateVec step(const StateVec& x, const InputVec& u) const;

  /// (df/dx, df/du) at (x, u). Throws UsageError on dimension mismatch.
  Jacobians jacobians(const StateVec& x, const InputVec& u) const;

  bool has_analytic_jacobians() const noexcept {
    return static_cast<bool>(jacobians_);
  }

 private:
  void check_dims(const StateVec& x, const InputVec& u) const;

  int state_dim_;
  int input_dim_;
  double dt_;
  StepFn step_;
  JacobianFn jacobians_;
};

/// Unicycle with state [x, y, theta, v] and input [angular rate, acceleration]:
///
///   x+ = x + v cos(theta) dt,   y+ = y + v sin(theta) dt,
///   theta+ = theta + u1 dt,     v+ = v + u2 dt.
///
/// theta is not wrapped.
Model unicycle(double dt = 0.1);

/// Affine model x+ = A x + B u + c. Mostly useful for tests.
Model affine(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd c,
             double dt = 1.0);

/// Affine approximation of a model around a nominal pair:
///   x+ - x_next = A (x - x_nominal) + B (u - u_nominal)
struct LinearizedDynamics {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  StateVec x_nominal;
  InputVec u_nominal;
  StateVec x_next;  ///< f(x_nominal, u_nominal)

  StateVec predict(const StateVec& x, const InputVec& u) const {
    return x_next + A * (x - x_nominal) + B * (u - u_nominal);
  }
};

LinearizedDynamics linearize(const Model& model, const StateVec& x_nominal,
                             const InputVec& u_nominal);

/// Rolls the model forward: result[0] = x0, result[k+1] = f(result[k], inputs[k]).
std::vector<StateVec> propagate(const Model& model, const StateVec& x0,
                                std::span<const InputVec> inputs);

}  // namespace impc
