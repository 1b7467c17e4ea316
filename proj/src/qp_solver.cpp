#include "impc/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "impc/error.hpp"

namespace impc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqualityFactor = 1e3;
constexpr double kRhoFreeRow = 1e-6;
constexpr double kEqualityTol = 1e-4;
constexpr double kRhoAdaptFactor = 5.0;

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

double clamp_scaling(double norm) {
  if (norm < kMinScaling) {
    return 1.0;
  }
  return std::clamp(norm, kMinScaling, kMaxScaling);
}

// Column-wise infinity norms of a column-major sparse matrix.
Eigen::VectorXd col_norms(const SparseMatrix& M) {
  Eigen::VectorXd norms = Eigen::VectorXd::Zero(M.cols());
  for (int j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      norms(j) = std::max(norms(j), std::abs(it.value()));
    }
  }
  return norms;
}

Eigen::VectorXd row_norms(const SparseMatrix& M) {
  Eigen::VectorXd norms = Eigen::VectorXd::Zero(M.rows());
  for (int j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      norms(it.row()) = std::max(norms(it.row()), std::abs(it.value()));
    }
  }
  return norms;
}

bool is_free_row(double l, double u) { return l == -kInf && u == kInf; }

}  // namespace

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Solved:
      return "solved";
    case QpStatus::MaxIter:
      return "max_iter";
    case QpStatus::PrimalInfeasible:
      return "primal_infeasible";
  }
  return "unknown";
}

void QpProblem::validate() const {
  const auto n = q.size();
  const auto m = l.size();
  if (P.rows() != n || P.cols() != n) {
    throw UsageError("QP: P must be n x n with n = size(q)");
  }
  if (A.cols() != n || A.rows() != m || u.size() != m) {
    throw UsageError("QP: A must be m x n with m = size(l) = size(u)");
  }
  if (!q.allFinite()) {
    throw UsageError("QP: q has non-finite entries");
  }
  const SparseMatrix asym = SparseMatrix(P.transpose()) - P;
  for (int j = 0; j < asym.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(asym, j); it; ++it) {
      if (!(std::abs(it.value()) <= 1e-12)) {
        throw UsageError("QP: P is not symmetric");
      }
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isnan(l(i)) || std::isnan(u(i)) || l(i) == kInf ||
        u(i) == -kInf || l(i) > u(i)) {
      throw UsageError("QP: bounds must satisfy -inf <= l <= u <= inf");
    }
  }
}

void QpSettings::validate() const {
  if (!(rho > 0.0) || !(sigma > 0.0) || !(eps_abs >= 0.0) ||
      !(eps_rel >= 0.0) || !(eps_prim_inf > 0.0) || max_iter < 1 ||
      check_interval < 1 || scaling_iter < 0) {
    throw UsageError("QP settings: parameters must be positive");
  }
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw UsageError("QP settings: alpha must lie in (0, 2)");
  }
}

QpSolver::QpSolver(QpSettings settings) : settings_(settings) {
  settings_.validate();
}

void QpSolver::scale(const QpProblem& problem) {
  const auto n = problem.num_variables();
  const auto m = problem.num_constraints();
  P_ = problem.P;
  A_ = problem.A;
  q_ = problem.q;
  D_ = Eigen::VectorXd::Ones(n);
  E_ = Eigen::VectorXd::Ones(m);
  cost_scale_ = 1.0;

  // Ruiz equilibration of [P A'; A 0] followed by cost normalization.
  for (int pass = 0; pass < settings_.scaling_iter; ++pass) {
    Eigen::VectorXd d = col_norms(P_).cwiseMax(col_norms(A_));
    Eigen::VectorXd e = row_norms(A_);
    for (Eigen::Index j = 0; j < n; ++j) {
      d(j) = 1.0 / std::sqrt(clamp_scaling(d(j)));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      e(i) = 1.0 / std::sqrt(clamp_scaling(e(i)));
    }
    P_ = d.asDiagonal() * P_ * d.asDiagonal();
    A_ = e.asDiagonal() * A_ * d.asDiagonal();
    q_ = d.cwiseProduct(q_);
    D_ = D_.cwiseProduct(d);
    E_ = E_.cwiseProduct(e);

    const double p_mean = n > 0 ? col_norms(P_).mean() : 0.0;
    const double gamma =
        1.0 / clamp_scaling(std::max(p_mean, inf_norm(q_)));
    P_ *= gamma;
    q_ *= gamma;
    cost_scale_ *= gamma;
  }

  l_ = problem.l;
  u_ = problem.u;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isfinite(l_(i))) l_(i) *= E_(i);
    if (std::isfinite(u_(i))) u_(i) *= E_(i);
  }
}

void QpSolver::set_rho(double rho_bar) {
  rho_bar_ = std::clamp(rho_bar, kRhoMin, kRhoMax);
  rho_.resize(l_.size());
  for (Eigen::Index i = 0; i < l_.size(); ++i) {
    if (is_free_row(l_(i), u_(i))) {
      rho_(i) = kRhoFreeRow;
    } else if (u_(i) - l_(i) < kEqualityTol) {
      rho_(i) = kRhoEqualityFactor * rho_bar_;
    } else {
      rho_(i) = rho_bar_;
    }
  }
}

void QpSolver::build_kkt() {
  const auto n = P_.rows();
  const auto m = A_.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(P_.nonZeros() + A_.nonZeros() + n + m);
  for (int j = 0; j < P_.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(P_, j); it; ++it) {
      if (it.row() <= it.col()) {
        triplets.emplace_back(it.row(), it.col(), it.value());
      }
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    triplets.emplace_back(j, j, settings_.sigma);
  }
  for (int j = 0; j < A_.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(A_, j); it; ++it) {
      triplets.emplace_back(it.col(), n + it.row(), it.value());
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    triplets.emplace_back(n + i, n + i, -1.0 / rho_(i));
  }
  kkt_.resize(n + m, n + m);
  kkt_.setFromTriplets(triplets.begin(), triplets.end());
  kkt_.makeCompressed();
}

void QpSolver::factorize() {
  const int dim = static_cast<int>(kkt_.outerSize());
  const int* outer = kkt_.outerIndexPtr();
  const int* inner = kkt_.innerIndexPtr();
  const bool same_pattern =
      pattern_outer_.size() == static_cast<std::size_t>(dim + 1) &&
      std::equal(outer, outer + dim + 1, pattern_outer_.begin()) &&
      pattern_inner_.size() == static_cast<std::size_t>(kkt_.nonZeros()) &&
      std::equal(inner, inner + kkt_.nonZeros(), pattern_inner_.begin());
  if (!same_pattern) {
    ldlt_.analyzePattern(kkt_);
    pattern_outer_.assign(outer, outer + dim + 1);
    pattern_inner_.assign(inner, inner + kkt_.nonZeros());
  }
  ldlt_.factorize(kkt_);
  if (ldlt_.info() != Eigen::Success) {
    throw UsageError("QP: KKT factorization failed (is P positive semidefinite?)");
  }
}

QpSolution QpSolver::solve(const QpProblem& problem,
                           const QpWarmStart* warm_start) {
  problem.validate();
  const auto n = problem.num_variables();
  const auto m = problem.num_constraints();

  scale(problem);
  set_rho(settings_.rho);
  build_kkt();
  factorize();

  // Scaled iterates: x = D xs, z = zs / E, y = E ys / c.
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd zs = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd ys = Eigen::VectorXd::Zero(m);
  if (warm_start != nullptr) {
    if (warm_start->z.size() != n || warm_start->y.size() != m) {
      throw UsageError("QP: warm start has wrong dimensions");
    }
    xs = warm_start->z.cwiseQuotient(D_);
    ys = E_.cwiseInverse().cwiseProduct(warm_start->y) * cost_scale_;
    zs = (A_ * xs).cwiseMax(l_).cwiseMin(u_);
  }

  const double alpha = settings_.alpha;
  const double sigma = settings_.sigma;
  Eigen::VectorXd rhs(n + m);
  Eigen::VectorXd sol(n + m);
  Eigen::VectorXd x_tilde(n);
  Eigen::VectorXd z_tilde(m);
  Eigen::VectorXd z_relaxed(m);
  Eigen::VectorXd ys_prev = ys;

  QpSolution result;
  result.status = QpStatus::MaxIter;

  // Unscaled quantities at the current iterate.
  Eigen::VectorXd x(n);
  Eigen::VectorXd z(m);
  Eigen::VectorXd y(m);
  auto unscale = [&] {
    x = D_.cwiseProduct(xs);
    z = zs.cwiseQuotient(E_);
    y = E_.cwiseProduct(ys) / cost_scale_;
  };

  int iter = 0;
  for (iter = 1; iter <= settings_.max_iter; ++iter) {
    const bool check = iter == 1 || iter % settings_.check_interval == 0 ||
                       iter == settings_.max_iter;
    if (check) {
      ys_prev = ys;
    }

    rhs.head(n) = sigma * xs - q_;
    rhs.tail(m) = zs - ys.cwiseQuotient(rho_);
    sol = ldlt_.solve(rhs);
    x_tilde = sol.head(n);
    z_tilde = zs + (sol.tail(m) - ys).cwiseQuotient(rho_);

    xs = alpha * x_tilde + (1.0 - alpha) * xs;
    z_relaxed = alpha * z_tilde + (1.0 - alpha) * zs;
    const Eigen::VectorXd z_next =
        (z_relaxed + ys.cwiseQuotient(rho_)).cwiseMax(l_).cwiseMin(u_);
    ys += rho_.cwiseProduct(z_relaxed - z_next);
    zs = z_next;

    if (!check) {
      continue;
    }

    unscale();
    const Eigen::VectorXd Ax = problem.A * x;
    const Eigen::VectorXd Px = problem.P * x;
    const Eigen::VectorXd Aty = problem.A.transpose() * y;
    const double prim_res = inf_norm(Ax - z);
    const double dual_res = inf_norm(Px + problem.q + Aty);
    const double prim_tol =
        settings_.eps_abs +
        settings_.eps_rel * std::max(inf_norm(Ax), inf_norm(z));
    const double dual_tol =
        settings_.eps_abs +
        settings_.eps_rel *
            std::max({inf_norm(Px), inf_norm(Aty), inf_norm(problem.q)});
    result.primal_residual = prim_res;
    result.dual_residual = dual_res;

    if (prim_res <= prim_tol && dual_res <= dual_tol) {
      result.status = QpStatus::Solved;
      break;
    }

    // Primal infeasibility certificate: dy with A'dy = 0 and
    // u'max(dy,0) + l'min(dy,0) < 0.
    if (m > 0) {
      Eigen::VectorXd dy = E_.cwiseProduct(ys - ys_prev) / cost_scale_;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (problem.u(i) == kInf) dy(i) = std::min(dy(i), 0.0);
        if (problem.l(i) == -kInf) dy(i) = std::max(dy(i), 0.0);
      }
      const double dy_norm = inf_norm(dy);
      if (dy_norm > settings_.eps_prim_inf) {
        dy /= dy_norm;
        double support = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
          if (dy(i) > 0.0) support += problem.u(i) * dy(i);
          if (dy(i) < 0.0) support += problem.l(i) * dy(i);
        }
        if (support < -settings_.eps_prim_inf &&
            inf_norm(problem.A.transpose() * dy) < settings_.eps_prim_inf) {
          result.status = QpStatus::PrimalInfeasible;
          break;
        }
      }
    }

    if (settings_.adaptive_rho && m > 0 && iter > 1) {
      const Eigen::VectorXd Axs = A_ * xs;
      const Eigen::VectorXd Pxs = P_ * xs;
      const Eigen::VectorXd Atys = A_.transpose() * ys;
      const double prim_scaled =
          inf_norm(Axs - zs) / (std::max(inf_norm(Axs), inf_norm(zs)) + 1e-10);
      const double dual_scaled =
          inf_norm(Pxs + q_ + Atys) /
          (std::max({inf_norm(Pxs), inf_norm(Atys), inf_norm(q_)}) + 1e-10);
      const double rho_new =
          std::clamp(rho_bar_ * std::sqrt(prim_scaled / (dual_scaled + 1e-10)),
                     kRhoMin, kRhoMax);
      if (rho_new > kRhoAdaptFactor * rho_bar_ ||
          rho_new < rho_bar_ / kRhoAdaptFactor) {
        set_rho(rho_new);
        build_kkt();
        factorize();
      }
    }
  }

  unscale();
  result.iterations = std::min(iter, settings_.max_iter);
  result.z = x;
  result.y = y;
  result.objective = problem.objective(x);
  return result;
}

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings) {
  QpSolver solver(settings);
  return solver.solve(problem);
}

}  // namespace impc
