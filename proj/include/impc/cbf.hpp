#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "impc/dynamics.hpp"

namespace impc {

/// Disk obstacle in the plane. Construct through `make` to validate.
struct CircleObstacle {
  Eigen::Vector2d center;
  double radius;

  static CircleObstacle make(Eigen::Vector2d center, double radius);

  /// Signed squared clearance |p - c|^2 - r^2 (zero on the boundary).
  double clearance(const Eigen::Vector2d& p) const {
    return (p - center).squaredNorm() - radius * radius;
  }
};

/// Which state components hold the planar position.
struct PositionIndices {
  int x = 0;
  int y = 1;

  Eigen::Vector2d of(const StateVec& state) const {
    return {state(x), state(y)};
  }
};

/// Obstacle clearance as a function of the full state: h(x).
struct Barrier {
  CircleObstacle obstacle;
  PositionIndices position;

  double operator()(const StateVec& state) const {
    return obstacle.clearance(position.of(state));
  }
};

/// Supporting line of an obstacle at a boundary point:
/// h_par(p) = normal . p + offset, nonnegative on the side away from the disk.
struct TangentHalfplane {
  Eigen::Vector2d normal;         ///< tangent_point - center
  double offset;                  ///< m^2
  Eigen::Vector2d tangent_point;  ///< nearest boundary point

  double operator()(const Eigen::Vector2d& p) const {
    return normal.dot(p) + offset;
  }
};

/// Closest point on the circle to `p`. Throws DegenerateProjection when `p` is
/// within 1e-9 of the center.
Eigen::Vector2d nearest_boundary_point(const CircleObstacle& obstacle,
                                       const Eigen::Vector2d& p);

/// Tangent line through nearest_boundary_point(obstacle, p):
///   h_par(q) = (xt - x0) qx + (yt - y0) qy - (r^2 - x0^2 - y0^2 + xt x0 + yt y0)
TangentHalfplane tangent_halfplane(const CircleObstacle& obstacle,
                                   const Eigen::Vector2d& p);

/// Barrier order and per-order decay parameters, plus the obstacle set.
struct CbfSpec {
  int order = 1;               ///< m_cbf
  std::vector<double> gammas;  ///< gamma_1..gamma_m, each in (0, 1]
  std::vector<CircleObstacle> obstacles;
  PositionIndices position;

  /// Throws ConfigError when the order or a gamma is out of range.
  void validate() const;
};

/// Coefficients c_0..c_{order-1} with
///   psi_{order-1}(x_k) = sum_v c_v psi_0(x_{k+v})
/// obtained by unrolling psi_i(x_k) = psi_{i-1}(x_{k+1}) + (gamma_i - 1) psi_{i-1}(x_k).
/// Uses gammas[0 .. order-2].
std::vector<double> psi_expansion(int order, std::span<const double> gammas);

/// Z_{0,i} .. Z_{i,i} for order i, using gammas[0 .. i-2].
///
/// Z_{0,i} = c_0, Z_{v,i} = -c_v for 1 <= v <= i-1 (i >= 2), Z_{i,i} = 0, and
/// Z_{0,1} = 1. The signs for 1 <= v <= i-2 follow the unrolled recursion; a
/// literal reading of the elementary-symmetric sum gives the opposite sign
/// there for i >= 3.
///
/// Throws UsageError for i < 1 or a gamma outside (0, 1].
std::vector<double> z_coefficients(int order, std::span<const double> gammas);

/// psi_0 .. psi_{orders-1} evaluated from a scalar psi_0 sequence on steps
/// 0..K. Entry i has K + 1 - i values (psi_i at steps 0..K-i).
std::vector<std::vector<double>> psi_sequence(std::span<const double> psi0,
                                              std::span<const double> gammas,
                                              int orders);

/// One relaxed high-order barrier row written in terms of psi_0 values:
///
///   sum_s psi0_coef[s] * psi_0(x_s) + slack_coef * omega * psi_0(x_0) >= 0
///
/// psi0_coef is indexed by horizon step; psi0_coef[0] is always zero because
/// x_0 is the measured state and only enters through the slack term.
struct PsiRow {
  int order = 1;  ///< i
  int step = 1;   ///< k
  std::vector<double> psi0_coef;
  double slack_coef = 0.0;

  /// Row value for a scalar psi_0 sequence and slack value.
  double evaluate(std::span<const double> psi0, double omega) const;
};

/// psi_{i-1}(x_k) + sum_{v=1}^{i} Z_{v,i} (1-gamma_i)^k psi_0(x_v)
///     >= omega Z_{0,i} (1-gamma_i)^k psi_0(x_0)
/// in PsiRow form. Requires k >= 1 and gammas.size() >= order.
PsiRow psi_row(int order, int step, std::span<const double> gammas);

/// A term coef * states[step](component).
struct StateTerm {
  int step;
  int component;
  double coef;
};

/// Barrier row in decision variables:
///   sum terms + slack_coef * omega_row + constant >= 0
struct HocbfRow {
  int obstacle = 0;
  int order = 1;
  int step = 1;
  std::vector<StateTerm> terms;
  double slack_coef = 0.0;
  double constant = 0.0;

  /// Row value (left side minus zero) at the given states and slack.
  double evaluate(std::span<const StateVec> states, double omega) const;
};

/// Number of rows hocbf_rows emits for a horizon: per obstacle,
/// sum_{i=1}^{m} max(0, N + 1 - i).
int hocbf_row_count(const CbfSpec& spec, int horizon);

/// Linearized barrier rows around a nominal state trajectory (N + 1 states,
/// nominal[0] is the measured state). Rows are ordered obstacle-major, then by
/// order, then by step k = 1..N+1-i. The tangent halfplane of step k is
/// anchored at nominal[k].
///
/// Throws DegenerateProjection if a nominal position sits on an obstacle center.
std::vector<HocbfRow> hocbf_rows(std::span<const StateVec> nominal,
                                 const CbfSpec& spec);

}  // namespace impc
