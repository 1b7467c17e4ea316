#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library code they check.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "impc/cftoc.hpp"
#include "impc/dynamics.hpp"
#include "impc/qp_solver.hpp"

namespace oracle {

// Central differences of model.step with perturbation h.
impc::Jacobians finite_difference_jacobians(const impc::Model& model,
                                            const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& u,
                                            double h = 1e-5);

struct DenseQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  impc::QpProblem to_sparse() const;
  double objective(const Eigen::VectorXd& z) const {
    return 0.5 * z.dot(P * z) + q.dot(z);
  }
  // Largest bound violation of A z.
  double violation(const Eigen::VectorXd& z) const;
};

// Exhaustive active-set search for a strictly convex QP: every assignment of
// each row to {inactive, at lower, at upper} is tried, the equality-constrained
// KKT system is solved, and the best feasible candidate wins. Returns nullopt
// when no candidate is feasible.
std::optional<Eigen::VectorXd> active_set_qp(const DenseQp& qp,
                                             double feas_tol = 1e-9);

// psi_i for i = 0..orders-1 by plain recursion on a scalar psi_0 sequence.
std::vector<std::vector<double>> psi_recursion(const std::vector<double>& psi0,
                                               const std::vector<double>& gammas,
                                               int orders);

// Coefficients of psi_{order-1}(x_k) over psi_0(x_k .. x_{k+order-1}) obtained
// by pushing unit impulses through psi_recursion.
std::vector<double> unrolled_coefficients(int order,
                                          const std::vector<double>& gammas);

// Stated CFTOC cost evaluated term by term.
double cftoc_cost(const impc::CostWeights& w,
                  const std::vector<Eigen::VectorXd>& states,
                  const std::vector<Eigen::VectorXd>& inputs,
                  const std::vector<double>& slacks,
                  const std::vector<int>& slack_obstacle,
                  const std::vector<int>& slack_order,
                  const std::vector<int>& slack_step);

// Random helpers.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(eng_);
  }
  Eigen::VectorXd vector(Eigen::Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Random strictly convex QP with n variables and m rows. Rows are a mix of
// two-sided, one-sided and equality constraints built around a known feasible
// point so that the problem is feasible.
DenseQp random_feasible_qp(Gen& gen, int n, int m);

}  // namespace oracle
