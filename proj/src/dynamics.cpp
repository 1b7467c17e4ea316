#include "impc/dynamics.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "impc/error.hpp"

namespace impc {

Model::Model(int state_dim, int input_dim, double dt, StepFn step,
             JacobianFn jacobians)
    : state_dim_(state_dim),
      input_dim_(input_dim),
      dt_(dt),
      step_(std::move(step)),
      jacobians_(std::move(jacobians)) {
  if (state_dim <= 0 || input_dim <= 0) {
    throw UsageError("model dimensions must be positive");
  }
  if (!(dt > 0.0)) {
    throw UsageError("model dt must be positive");
  }
  if (!step_) {
    throw UsageError("model requires a step function");
  }
}

void Model::check_dims(const StateVec& x, const InputVec& u) const {
  if (x.size() != state_dim_ || u.size() != input_dim_) {
    throw UsageError("dimension mismatch: expected state " +
                     std::to_string(state_dim_) + ", input " +
                     std::to_string(input_dim_) + "; got " +
                     std::to_string(x.size()) + ", " +
                     std::to_string(u.size()));
  }
}

StateVec Model::step(const StateVec& x, const InputVec& u) const {
  check_dims(x, u);
  return step_(x, u);
}

Jacobians Model::jacobians(const StateVec& x, const InputVec& u) const {
  check_dims(x, u);
  if (jacobians_) {
    return jacobians_(x, u);
  }

  constexpr double h = kFiniteDifferenceStep;
  Jacobians jac{Eigen::MatrixXd(state_dim_, state_dim_),
                Eigen::MatrixXd(state_dim_, input_dim_)};
  StateVec xp = x;
  StateVec xm = x;
  for (int i = 0; i < state_dim_; ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    jac.A.col(i) = (step_(xp, u) - step_(xm, u)) / (2.0 * h);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  InputVec up = u;
  InputVec um = u;
  for (int i = 0; i < input_dim_; ++i) {
    up(i) = u(i) + h;
    um(i) = u(i) - h;
    jac.B.col(i) = (step_(x, up) - step_(x, um)) / (2.0 * h);
    up(i) = u(i);
    um(i) = u(i);
  }
  return jac;
}

Model unicycle(double dt) {
  auto step = [dt](const StateVec& x, const InputVec& u) {
    StateVec next(4);
    next(0) = x(0) + x(3) * std::cos(x(2)) * dt;
    next(1) = x(1) + x(3) * std::sin(x(2)) * dt;
    next(2) = x(2) + u(0) * dt;
    next(3) = x(3) + u(1) * dt;
    return next;
  };
  auto jacobians = [dt](const StateVec& x, const InputVec&) {
    const double c = std::cos(x(2));
    const double s = std::sin(x(2));
    Jacobians jac{Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Zero(4, 2)};
    jac.A(0, 2) = -x(3) * s * dt;
    jac.A(0, 3) = c * dt;
    jac.A(1, 2) = x(3) * c * dt;
    jac.A(1, 3) = s * dt;
    jac.B(2, 0) = dt;
    jac.B(3, 1) = dt;
    return jac;
  };
  return Model(4, 2, dt, std::move(step), std::move(jacobians));
}

Model affine(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd c,
             double dt) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || c.size() != n) {
    throw UsageError("affine model: inconsistent matrix shapes");
  }
  const int nx = static_cast<int>(n);
  const int nu = static_cast<int>(B.cols());
  auto step = [A, B, c](const StateVec& x, const InputVec& u) -> StateVec {
    return A * x + B * u + c;
  };
  auto jacobians = [A, B](const StateVec&, const InputVec&) {
    return Jacobians{A, B};
  };
  return Model(nx, nu, dt, std::move(step), std::move(jacobians));
}

LinearizedDynamics linearize(const Model& model, const StateVec& x_nominal,
                             const InputVec& u_nominal) {
  auto jac = model.jacobians(x_nominal, u_nominal);
  return LinearizedDynamics{std::move(jac.A), std::move(jac.B), x_nominal,
                            u_nominal, model.step(x_nominal, u_nominal)};
}

std::vector<StateVec> propagate(const Model& model, const StateVec& x0,
                                std::span<const InputVec> inputs) {
  std::vector<StateVec> states;
  states.reserve(inputs.size() + 1);
  states.push_back(x0);
  for (const auto& u : inputs) {
    states.push_back(model.step(states.back(), u));
  }
  return states;
}

}  // namespace impc
