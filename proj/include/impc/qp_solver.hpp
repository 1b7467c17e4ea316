#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace impc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// min 1/2 z'Pz + q'z  s.t.  l <= Az <= u
///
/// P is stored in full (both triangles). Infinite bounds are allowed.
struct QpProblem {
  SparseMatrix P;
  Eigen::VectorXd q;
  SparseMatrix A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  Eigen::Index num_variables() const { return q.size(); }
  Eigen::Index num_constraints() const { return l.size(); }

  /// Throws UsageError on shape mismatch, asymmetric P, l > u or NaN data.
  void validate() const;

  double objective(const Eigen::VectorXd& z) const {
    return 0.5 * z.dot(P * z) + q.dot(z);
  }
};

struct QpSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  ///< over-relaxation, in (0, 2)
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_prim_inf = 1e-4;
  int max_iter = 20000;
  int check_interval = 25;  ///< iterations between termination checks
  int scaling_iter = 10;    ///< Ruiz equilibration passes (0 disables)
  bool adaptive_rho = true;

  void validate() const;
};

enum class QpStatus { Solved, MaxIter, PrimalInfeasible };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd z;  ///< primal
  Eigen::VectorXd y;  ///< constraint multipliers
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
};

struct QpWarmStart {
  Eigen::VectorXd z;
  Eigen::VectorXd y;
};

/// ADMM operator-splitting solver. The KKT matrix
///
///   [ P + sigma I     A'       ]
///   [ A           -diag(1/rho) ]
///
/// is quasi-definite, so a sparse LDL' factorization exists for any symmetric
/// ordering; it is computed once per solve and refreshed only when rho adapts.
///
/// A solver instance owns its workspace: reuse it across solves of same-shaped
/// problems, but do not share one instance between threads.
class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {});

  const QpSettings& settings() const noexcept { return settings_; }

  QpSolution solve(const QpProblem& problem,
                   const QpWarmStart* warm_start = nullptr);

 private:
  void scale(const QpProblem& problem);
  void set_rho(double rho_bar);
  void build_kkt();
  void factorize();

  QpSettings settings_;

  // Scaled problem data.
  SparseMatrix P_;
  SparseMatrix A_;
  Eigen::VectorXd q_;
  Eigen::VectorXd l_;
  Eigen::VectorXd u_;
  Eigen::VectorXd D_;  // variable scaling
  Eigen::VectorXd E_;  // constraint scaling
  double cost_scale_ = 1.0;

  double rho_bar_ = 0.1;
  Eigen::VectorXd rho_;
  SparseMatrix kkt_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Upper> ldlt_;
  std::vector<int> pattern_outer_;
  std::vector<int> pattern_inner_;
};

/// One-shot convenience wrapper.
QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {});

}  // namespace impc
