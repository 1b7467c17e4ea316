#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "impc/error.hpp"
#include "impc/impc.hpp"
#include "oracles.hpp"

using impc::StateVec;

namespace {

std::vector<StateVec> column(std::initializer_list<double> values) {
  std::vector<StateVec> out;
  for (double v : values) out.push_back(StateVec::Constant(1, v));
  return out;
}

}  // namespace

TEST_CASE("convergence error examples") {
  const auto a = column({1, 2, 3});
  auto e = impc::convergence_error(a, a);
  CHECK(e.abs == 0.0);
  CHECK(e.rel == 0.0);

  const auto twice = column({2, 4, 6});
  e = impc::convergence_error(twice, a);
  CHECK(e.rel == doctest::Approx(1.0));

  const auto prev = column({6, 8, 0});
  const auto next = column({6, 9, 0});
  e = impc::convergence_error(next, prev);
  CHECK(e.abs == doctest::Approx(1.0));
  CHECK(e.rel == doctest::Approx(0.1));

  const auto zeros = column({0, 0});
  e = impc::convergence_error(column({0, 1e-6}), zeros);
  CHECK(e.abs == doctest::Approx(1e-6));
  CHECK(e.rel == std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(impc::convergence_error(a, zeros), impc::UsageError);
}

TEST_CASE("warm start shifts and repeats the last input") {
  const auto model = impc::unicycle();
  const impc::InputVec a = Eigen::Vector2d(1, 2);
  const impc::InputVec b = Eigen::Vector2d(-3, 0.5);
  const std::vector<impc::InputVec> ab{a, b};
  const StateVec x_next = (StateVec(4) << 1, 2, 0.3, 0.4).finished();
  const auto w = impc::warm_start_next(ab, model, x_next);
  REQUIRE(w.inputs.size() == 2);
  CHECK(w.inputs[0] == b);
  CHECK(w.inputs[1] == b);
  CHECK(w.states[0] == x_next);
  CHECK(w.states == impc::propagate(model, x_next, w.inputs));

  const std::vector<impc::InputVec> constant(5, a);
  const auto c = impc::warm_start_next(constant, model, x_next);
  CHECK(c.inputs == constant);
}

TEST_CASE("zero warm start") {
  const auto model = impc::unicycle();
  const StateVec x0 = (StateVec(4) << -3, 0, 0, 0).finished();
  const auto w = impc::zero_warm_start(model, x0, 24);
  CHECK(w.consistent());
  CHECK(w.horizon() == 24);
  for (const auto& x : w.states) CHECK(x == x0);
  for (const auto& u : w.inputs) CHECK(u.isZero());
}

TEST_CASE("distant obstacle at the reference gives zero input") {
  auto mpc = fixture::paper().scenario.mpc;
  mpc.cbf.obstacles = {impc::CircleObstacle::make({100, 100}, 1)};
  const StateVec x = mpc.weights.x_ref;
  const auto step = impc::impc_step(mpc, x, impc::zero_warm_start(mpc.model, x, mpc.horizon));
  REQUIRE(step.report.feasible);
  REQUIRE(step.u_apply.has_value());
  CHECK(step.u_apply->norm() <= 1e-4);
  CHECK(step.report.iterations >= 1);
  CHECK(step.report.converged);
}

TEST_CASE("first paper step: report invariants") {
  const auto file = fixture::paper();
  const auto& s = file.scenario;
  const auto step = impc::impc_step(
      s.mpc, s.initial_state, impc::zero_warm_start(s.mpc.model, s.initial_state, s.mpc.horizon));
  const auto& r = step.report;
  REQUIRE(r.feasible);
  CHECK(r.iterations >= 1);
  CHECK(r.iterations <= s.mpc.convergence.j_max);
  if (r.converged) {
    CHECK((r.e_abs < s.mpc.convergence.eps_abs || r.e_rel < s.mpc.convergence.eps_rel));
  }
  CHECK(r.h_min == doctest::Approx(8.0));
  CHECK(r.wall_time > 0.0);
  CHECK(step.solution.consistent());
  CHECK(step.solution.horizon() == 24);
  CHECK(*step.u_apply == step.solution.inputs[0]);
  // Accelerates toward the target.
  CHECK((*step.u_apply)(1) > 0.0);
}

TEST_CASE("regulation without obstacles stays at the target") {
  auto scenario = fixture::paper().scenario;
  scenario.mpc.cbf.obstacles.clear();
  scenario.initial_state = scenario.mpc.weights.x_ref;
  scenario.t_sim = 15;
  const auto run = impc::closed_loop(scenario);
  CHECK(run.completed);
  for (const auto& x : run.states) {
    CHECK((x - scenario.mpc.weights.x_ref).cwiseAbs().maxCoeff() <= 1e-3);
  }
}

TEST_CASE("short paper run: consistency, safety and determinism") {
  auto scenario = fixture::paper().scenario;
  scenario.t_sim = 8;
  const auto a = impc::closed_loop(scenario);
  REQUIRE(a.completed);
  REQUIRE(a.states.size() == 9);
  REQUIRE(a.reports.size() == 8);
  for (int t = 0; t < 8; ++t) {
    CHECK(a.states[t + 1] == scenario.mpc.model.step(a.states[t], a.inputs[t]));
    CHECK(a.reports[t].t == t);
    CHECK(a.reports[t].feasible);
    CHECK(a.reports[t].iterations <= scenario.mpc.convergence.j_max);
    CHECK(a.reports[t].h_min == doctest::Approx(impc::min_clearance(scenario.mpc.cbf, a.states[t])));
  }
  for (const auto& x : a.states) CHECK(impc::min_clearance(scenario.mpc.cbf, x) >= 0.0);

  const auto b = impc::closed_loop(scenario);
  CHECK(a.states == b.states);
  CHECK(a.inputs == b.inputs);
  for (int t = 0; t < 8; ++t) {
    CHECK(a.reports[t].iterations == b.reports[t].iterations);
    CHECK(a.reports[t].e_abs == b.reports[t].e_abs);
  }
}

TEST_CASE("unsafe initial state is a configuration error") {
  auto scenario = fixture::paper().scenario;
  scenario.initial_state = StateVec::Zero(4);
  try {
    impc::closed_loop(scenario);
    FAIL("expected ConfigError");
  } catch (const impc::ConfigError& e) {
    CHECK(e.key() == "initial_state");
    CHECK(std::string(e.what()).find("unsafe initial state") != std::string::npos);
  }
}

TEST_CASE("infeasible step is reported, not thrown") {
  auto mpc = fixture::paper().scenario.mpc;
  mpc.horizon = 6;
  // The first predicted state is fixed by x_now and leaves the state box.
  const StateVec x = (StateVec(4) << 9.9, 0, 0, 9.9).finished();
  const auto step = impc::impc_step(mpc, x, impc::zero_warm_start(mpc.model, x, mpc.horizon));
  CHECK_FALSE(step.report.feasible);
  CHECK_FALSE(step.u_apply.has_value());
}

TEST_CASE("config validation") {
  auto mpc = fixture::paper().scenario.mpc;
  mpc.convergence.j_max = 0;
  CHECK_THROWS_AS(mpc.validate(), impc::ConfigError);
  mpc = fixture::paper().scenario.mpc;
  mpc.horizon = 0;
  CHECK_THROWS_AS(mpc.validate(), impc::ConfigError);
}
