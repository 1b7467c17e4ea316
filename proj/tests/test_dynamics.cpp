#include <doctest.h>

#include <cmath>

#include "impc/dynamics.hpp"
#include "impc/error.hpp"
#include "oracles.hpp"

using impc::InputVec;
using impc::StateVec;

namespace {

StateVec state(double x, double y, double th, double v) {
  return (StateVec(4) << x, y, th, v).finished();
}

InputVec input(double a, double b) { return (InputVec(2) << a, b).finished(); }

}  // namespace

TEST_CASE("unicycle step matches hand-evaluated values") {
  const auto m = impc::unicycle(0.1);
  CHECK(m.step(state(0, 0, 0, 0), input(0, 0)).isApprox(state(0, 0, 0, 0)));
  CHECK((m.step(state(-3, 0, 0, 0), input(0, 5)) - state(-3, 0, 0, 0.5)).norm() < 1e-15);
  CHECK((m.step(state(0, 0, 0, 1), input(0, 0)) - state(0.1, 0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("zero input leaves heading and speed unchanged") {
  const auto m = impc::unicycle();
  oracle::Gen gen(11);
  for (int i = 0; i < 100; ++i) {
    const StateVec x = gen.vector(4, -10, 10);
    const StateVec next = m.step(x, input(0, 0));
    CHECK(next(2) == x(2));
    CHECK(next(3) == x(3));
  }
}

TEST_CASE("step rejects mismatched dimensions") {
  const auto m = impc::unicycle();
  CHECK_THROWS_AS(m.step(StateVec::Zero(3), input(0, 0)), impc::UsageError);
  CHECK_THROWS_AS(m.step(state(0, 0, 0, 0), InputVec::Zero(3)), impc::UsageError);
  CHECK_THROWS_AS(m.jacobians(StateVec::Zero(5), input(0, 0)), impc::UsageError);
}

TEST_CASE("unicycle jacobians at heading 0, unit speed") {
  const auto m = impc::unicycle(0.1);
  const auto jac = m.jacobians(state(0, 0, 0, 1), input(0, 0));
  Eigen::MatrixXd A(4, 4);
  A << 1, 0, 0, 0.1,
       0, 1, 0.1, 0,
       0, 0, 1, 0,
       0, 0, 0, 1;
  Eigen::MatrixXd B(4, 2);
  B << 0, 0, 0, 0, 0.1, 0, 0, 0.1;
  CHECK((jac.A - A).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((jac.B - B).cwiseAbs().maxCoeff() < 1e-15);

  const auto fd = oracle::finite_difference_jacobians(m, state(0, 0, 0, 1), input(0, 0));
  CHECK((fd.A - A).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((fd.B - B).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("heading column is the identity column at zero speed") {
  const auto m = impc::unicycle();
  const auto jac = m.jacobians(state(1, 2, 0.7, 0), input(1, 1));
  CHECK(jac.A.col(2).isApprox(Eigen::Vector4d(0, 0, 1, 0)));
}

TEST_CASE("analytic jacobians match central differences over the state box") {
  const auto m = impc::unicycle();
  oracle::Gen gen(2024);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const StateVec x = gen.vector(4, -10, 10);
    const InputVec u = (InputVec(2) << gen.uniform(-7, 7), gen.uniform(-5, 5)).finished();
    const auto a = m.jacobians(x, u);
    const auto fd = oracle::finite_difference_jacobians(m, x, u);
    worst = std::max({worst, (a.A - fd.A).cwiseAbs().maxCoeff(),
                      (a.B - fd.B).cwiseAbs().maxCoeff()});
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("finite-difference fallback agrees with analytic jacobians") {
  const auto analytic = impc::unicycle();
  const impc::Model numeric(4, 2, 0.1, [&](const StateVec& x, const InputVec& u) {
    return analytic.step(x, u);
  });
  CHECK_FALSE(numeric.has_analytic_jacobians());
  oracle::Gen gen(5);
  for (int i = 0; i < 50; ++i) {
    const StateVec x = gen.vector(4, -10, 10);
    const InputVec u = gen.vector(2, -5, 5);
    const auto a = analytic.jacobians(x, u);
    const auto n = numeric.jacobians(x, u);
    CHECK((a.A - n.A).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((a.B - n.B).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("linearization is first-order accurate") {
  const auto m = impc::unicycle();
  oracle::Gen gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const StateVec xb = gen.vector(4, -5, 5);
    const InputVec ub = gen.vector(2, -3, 3);
    const auto lin = impc::linearize(m, xb, ub);
    const StateVec dx = gen.vector(4, -1, 1).normalized();
    const InputVec du = gen.vector(2, -1, 1).normalized();
    double prev = 0.0;
    for (int s = 0; s < 4; ++s) {
      const double eps = std::pow(10.0, -1 - s);
      const double err =
          (lin.predict(xb + eps * dx, ub + eps * du) - m.step(xb + eps * dx, ub + eps * du)).norm();
      if (s > 0 && prev > 1e-12) {
        // Quadratic remainder: a 10x smaller step cuts the error ~100x.
        CHECK(err <= prev / 50.0);
      }
      prev = err;
    }
  }
}

TEST_CASE("linearization anchoring identity and small-perturbation bound") {
  const auto m = impc::unicycle();
  const StateVec xb = state(0, 0, 0, 1);
  const InputVec ub = input(0, 0);
  const auto lin = impc::linearize(m, xb, ub);
  CHECK((lin.predict(xb, ub) - lin.x_next).norm() <= 1e-12);
  CHECK((lin.x_next - m.step(xb, ub)).norm() == 0.0);

  oracle::Gen gen(3);
  for (int i = 0; i < 100; ++i) {
    const StateVec dx = gen.vector(4, -1, 1).normalized() * 1e-3;
    CHECK((lin.predict(xb + dx, ub) - m.step(xb + dx, ub)).norm() <= 1e-5);
  }
}

TEST_CASE("affine model linearization is exact") {
  Eigen::MatrixXd A(2, 2);
  A << 1, 0.5, -0.2, 0.9;
  Eigen::MatrixXd B(2, 1);
  B << 0, 1;
  const Eigen::Vector2d c(0.3, -0.1);
  const auto m = impc::affine(A, B, c);
  const auto lin = impc::linearize(m, Eigen::Vector2d(1, 2), InputVec::Constant(1, 0.5));
  oracle::Gen gen(4);
  for (int i = 0; i < 20; ++i) {
    const StateVec x = gen.vector(2, -5, 5);
    const InputVec u = gen.vector(1, -5, 5);
    CHECK((lin.predict(x, u) - m.step(x, u)).norm() < 1e-12);
  }
}

TEST_CASE("propagate examples") {
  const auto m = impc::unicycle();
  const std::vector<InputVec> zeros(5, input(0, 0));
  const auto rest = impc::propagate(m, state(-3, 0, 0, 0), zeros);
  REQUIRE(rest.size() == 6);
  for (const auto& x : rest) CHECK(x == state(-3, 0, 0, 0));

  const std::vector<InputVec> two(2, input(0, 0));
  const auto moving = impc::propagate(m, state(0, 0, 0, 1), two);
  REQUIRE(moving.size() == 3);
  CHECK((moving[1] - state(0.1, 0, 0, 1)).norm() < 1e-15);
  CHECK((moving[2] - state(0.2, 0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("propagate satisfies the step recurrence and the suffix property") {
  const auto m = impc::unicycle();
  oracle::Gen gen(99);
  std::vector<InputVec> U;
  for (int k = 0; k < 12; ++k) U.push_back(gen.vector(2, -5, 5));
  const StateVec x0 = gen.vector(4, -5, 5);
  const auto X = impc::propagate(m, x0, U);
  REQUIRE(X.size() == U.size() + 1);
  CHECK(X[0] == x0);
  for (std::size_t k = 0; k < U.size(); ++k) CHECK(X[k + 1] == m.step(X[k], U[k]));
  const auto suffix = impc::propagate(m, X[1], std::span<const InputVec>(U).subspan(1));
  for (std::size_t k = 0; k < suffix.size(); ++k) CHECK(suffix[k] == X[k + 1]);
}
