#include "impc/cftoc.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "impc/error.hpp"

namespace impc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_psd(const Eigen::MatrixXd& M, int dim, const std::string& key) {
  if (M.rows() != dim || M.cols() != dim) {
    throw ConfigError(key, "expected a " + std::to_string(dim) + "x" +
                               std::to_string(dim) + " weight");
  }
  if (!M.allFinite()) {
    throw ConfigError(key, "weight has non-finite entries");
  }
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ConfigError(key, "weight must be symmetric");
  }
  const double tol = 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -tol) {
    throw ConfigError(key, "weight must be positive semidefinite");
  }
}

void check_size(const Eigen::VectorXd& v, int dim, const std::string& key) {
  if (v.size() != dim) {
    throw ConfigError(key, "expected " + std::to_string(dim) + " entries, got " +
                               std::to_string(v.size()));
  }
}

}  // namespace

void CostWeights::validate(int state_dim, int input_dim,
                           int barrier_order) const {
  check_psd(Q, state_dim, "mpc.Q_diag");
  check_psd(R, input_dim, "mpc.R_diag");
  check_psd(S, barrier_order, "mpc.S_diag");
  check_psd(P_term, state_dim, "mpc.P_diag");
  check_size(x_ref, state_dim, "target_state");
  check_size(u_ref, input_dim, "input_ref");
  check_size(omega_ref, barrier_order, "omega_ref");
}

void Bounds::validate(int state_dim, int input_dim) const {
  check_size(x_min, state_dim, "bounds.x_min");
  check_size(x_max, state_dim, "bounds.x_max");
  check_size(u_min, input_dim, "bounds.u_min");
  check_size(u_max, input_dim, "bounds.u_max");
  for (int i = 0; i < state_dim; ++i) {
    if (std::isnan(x_min(i)) || std::isnan(x_max(i)) || x_min(i) > x_max(i)) {
      throw ConfigError("bounds", "x_min must not exceed x_max (component " +
                                      std::to_string(i) + ")");
    }
  }
  for (int i = 0; i < input_dim; ++i) {
    if (std::isnan(u_min(i)) || std::isnan(u_max(i)) || u_min(i) > u_max(i)) {
      throw ConfigError("bounds", "u_min must not exceed u_max (component " +
                                      std::to_string(i) + ")");
    }
  }
}

CftocLayout::CftocLayout(int horizon, int state_dim, int input_dim,
                         int num_slacks)
    : horizon_(horizon),
      state_dim_(state_dim),
      input_dim_(input_dim),
      num_slacks_(num_slacks),
      input_offset_((horizon + 1) * state_dim),
      slack_offset_((horizon + 1) * state_dim + horizon * input_dim) {
  if (horizon < 1 || state_dim < 1 || input_dim < 1 || num_slacks < 0) {
    throw UsageError("CFTOC layout: invalid dimensions");
  }
}

Eigen::VectorXd CftocLayout::stack(std::span<const StateVec> states,
                                   std::span<const InputVec> inputs,
                                   std::span<const double> slacks) const {
  if (states.size() != static_cast<std::size_t>(horizon_ + 1) ||
      inputs.size() != static_cast<std::size_t>(horizon_) ||
      slacks.size() != static_cast<std::size_t>(num_slacks_)) {
    throw UsageError("CFTOC layout: block sizes do not match layout");
  }
  Eigen::VectorXd z(num_variables());
  for (int k = 0; k <= horizon_; ++k) {
    z.segment(state_index(k, 0), state_dim_) = states[k];
  }
  for (int k = 0; k < horizon_; ++k) {
    z.segment(input_index(k, 0), input_dim_) = inputs[k];
  }
  for (int r = 0; r < num_slacks_; ++r) {
    z(slack_index(r)) = slacks[r];
  }
  return z;
}

CftocProblem assemble(const StateVec& x_now, const Trajectory& nominal,
                      std::span<const LinearizedDynamics> lin,
                      std::span<const HocbfRow> rows,
                      const CostWeights& weights, const Bounds& bounds) {
  if (!nominal.consistent() || nominal.horizon() < 1) {
    throw UsageError("assemble: nominal trajectory must have N+1 states and N inputs");
  }
  const int N = nominal.horizon();
  const int nx = static_cast<int>(x_now.size());
  if (lin.size() != static_cast<std::size_t>(N)) {
    throw UsageError("assemble: need one linearization per horizon step");
  }
  if (lin.front().A.rows() != nx) {
    throw UsageError("assemble: state dimension mismatch");
  }
  const int nu = static_cast<int>(lin.front().B.cols());
  if (nominal.states.front().size() != nx ||
      (nominal.states.front() - x_now).lpNorm<Eigen::Infinity>() > 1e-9) {
    throw UsageError("assemble: x_now must equal the first nominal state");
  }
  const int order = static_cast<int>(weights.S.rows());
  weights.validate(nx, nu, order);
  bounds.validate(nx, nu);
  for (const auto& row : rows) {
    if (row.order < 1 || row.order > order || row.step < 1 || row.step > N) {
      throw UsageError("assemble: barrier row outside horizon or slack weight size");
    }
  }

  const int num_rows = static_cast<int>(rows.size());
  CftocLayout layout(N, nx, nu, num_rows);
  const int n = layout.num_variables();

  // Cost.
  std::vector<Eigen::Triplet<double>> p_trip;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  double constant = 0.0;
  auto add_block = [&](const Eigen::MatrixXd& W, const std::vector<int>& idx,
                       const Eigen::VectorXd& ref) {
    const auto dim = static_cast<Eigen::Index>(idx.size());
    for (Eigen::Index a = 0; a < dim; ++a) {
      for (Eigen::Index b = 0; b < dim; ++b) {
        if (W(a, b) != 0.0) {
          p_trip.emplace_back(idx[a], idx[b], 2.0 * W(a, b));
        }
      }
      q(idx[a]) -= 2.0 * W.row(a).dot(ref);
    }
    constant += ref.dot(W * ref);
  };
  std::vector<int> idx;
  for (int k = 0; k <= N; ++k) {
    idx.clear();
    for (int c = 0; c < nx; ++c) idx.push_back(layout.state_index(k, c));
    add_block(k < N ? weights.Q : weights.P_term, idx, weights.x_ref);
  }
  for (int k = 0; k < N; ++k) {
    idx.clear();
    for (int c = 0; c < nu; ++c) idx.push_back(layout.input_index(k, c));
    add_block(weights.R, idx, weights.u_ref);
  }
  // Slacks grouped by (obstacle, step); each group uses the S sub-block of the
  // orders present at that step.
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (int r = 0; r < num_rows; ++r) {
    groups[{rows[r].obstacle, rows[r].step}].push_back(r);
  }
  for (const auto& [key, members] : groups) {
    const auto dim = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd W(dim, dim);
    Eigen::VectorXd ref(dim);
    idx.clear();
    for (Eigen::Index a = 0; a < dim; ++a) {
      const int oa = rows[members[a]].order - 1;
      ref(a) = weights.omega_ref(oa);
      for (Eigen::Index b = 0; b < dim; ++b) {
        W(a, b) = weights.S(oa, rows[members[b]].order - 1);
      }
      idx.push_back(layout.slack_index(members[a]));
    }
    add_block(W, idx, ref);
  }

  // Constraints.
  CftocRowBlocks blocks;
  blocks.initial = nx;
  blocks.dynamics = N * nx;
  blocks.state_box = N * nx;
  blocks.input_box = N * nu;
  blocks.barrier = num_rows;
  blocks.total = blocks.initial + blocks.dynamics + blocks.state_box +
                 blocks.input_box + blocks.barrier;
  const int m = blocks.total;

  std::vector<Eigen::Triplet<double>> a_trip;
  Eigen::VectorXd l(m);
  Eigen::VectorXd u(m);
  int row = 0;

  for (int c = 0; c < nx; ++c, ++row) {
    a_trip.emplace_back(row, layout.state_index(0, c), 1.0);
    l(row) = u(row) = x_now(c);
  }
  for (int k = 0; k < N; ++k) {
    const auto& ld = lin[k];
    if (ld.A.rows() != nx || ld.A.cols() != nx || ld.B.rows() != nx ||
        ld.B.cols() != nu) {
      throw UsageError("assemble: linearization shape mismatch at step " +
                       std::to_string(k));
    }
    const StateVec rhs = ld.x_next - ld.A * ld.x_nominal - ld.B * ld.u_nominal;
    for (int r = 0; r < nx; ++r, ++row) {
      a_trip.emplace_back(row, layout.state_index(k + 1, r), 1.0);
      for (int c = 0; c < nx; ++c) {
        a_trip.emplace_back(row, layout.state_index(k, c), -ld.A(r, c));
      }
      for (int c = 0; c < nu; ++c) {
        a_trip.emplace_back(row, layout.input_index(k, c), -ld.B(r, c));
      }
      l(row) = u(row) = rhs(r);
    }
  }
  for (int k = 1; k <= N; ++k) {
    for (int c = 0; c < nx; ++c, ++row) {
      a_trip.emplace_back(row, layout.state_index(k, c), 1.0);
      l(row) = bounds.x_min(c);
      u(row) = bounds.x_max(c);
    }
  }
  for (int k = 0; k < N; ++k) {
    for (int c = 0; c < nu; ++c, ++row) {
      a_trip.emplace_back(row, layout.input_index(k, c), 1.0);
      l(row) = bounds.u_min(c);
      u(row) = bounds.u_max(c);
    }
  }
  for (int r = 0; r < num_rows; ++r, ++row) {
    for (const auto& term : rows[r].terms) {
      a_trip.emplace_back(row, layout.state_index(term.step, term.component),
                          term.coef);
    }
    a_trip.emplace_back(row, layout.slack_index(r), rows[r].slack_coef);
    l(row) = -rows[r].constant;
    u(row) = kInf;
  }

  CftocProblem problem{QpProblem{}, layout, blocks, constant};
  problem.qp.P.resize(n, n);
  problem.qp.P.setFromTriplets(p_trip.begin(), p_trip.end());
  problem.qp.A.resize(m, n);
  problem.qp.A.setFromTriplets(a_trip.begin(), a_trip.end());
  problem.qp.q = std::move(q);
  problem.qp.l = std::move(l);
  problem.qp.u = std::move(u);
  return problem;
}

CftocSolution unpack(const Eigen::VectorXd& z, const CftocLayout& layout) {
  if (z.size() != layout.num_variables()) {
    throw UsageError("unpack: solution size does not match layout");
  }
  CftocSolution out;
  const int N = layout.horizon();
  out.states.reserve(N + 1);
  out.inputs.reserve(N);
  for (int k = 0; k <= N; ++k) {
    out.states.emplace_back(z.segment(layout.state_index(k, 0), layout.state_dim()));
  }
  for (int k = 0; k < N; ++k) {
    out.inputs.emplace_back(z.segment(layout.input_index(k, 0), layout.input_dim()));
  }
  out.slacks.resize(layout.num_slacks());
  for (int r = 0; r < layout.num_slacks(); ++r) {
    out.slacks[r] = z(layout.slack_index(r));
  }
  return out;
}

CftocSolution unpack(const QpSolution& solution, const CftocProblem& problem) {
  if (solution.status != QpStatus::Solved) {
    throw StepInfeasible("CFTOC not solved: " +
                         std::string(to_string(solution.status)));
  }
  CftocSolution out = unpack(solution.z, problem.layout);
  out.objective = solution.objective + problem.objective_constant;
  out.status = solution.status;
  return out;
}

}  // namespace impc
