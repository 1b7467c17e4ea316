#include "impc/cbf.hpp"

#include <cmath>
#include <string>

#include "impc/error.hpp"

namespace impc {

namespace {

constexpr double kDegenerateDistance = 1e-9;

bool gamma_in_range(double gamma) { return gamma > 0.0 && gamma <= 1.0; }

void check_gammas(std::span<const double> gammas, std::size_t count) {
  if (gammas.size() < count) {
    throw UsageError("need " + std::to_string(count) + " decay parameters, got " +
                     std::to_string(gammas.size()));
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!gamma_in_range(gammas[i])) {
      throw UsageError("gamma_" + std::to_string(i + 1) +
                       " must lie in (0, 1], got " + std::to_string(gammas[i]));
    }
  }
}

}  // namespace

CircleObstacle CircleObstacle::make(Eigen::Vector2d center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw UsageError("obstacle radius must be positive and finite");
  }
  if (!center.allFinite()) {
    throw UsageError("obstacle center must be finite");
  }
  return CircleObstacle{center, radius};
}

Eigen::Vector2d nearest_boundary_point(const CircleObstacle& obstacle,
                                       const Eigen::Vector2d& p) {
  const Eigen::Vector2d offset = p - obstacle.center;
  const double distance = offset.norm();
  if (distance < kDegenerateDistance) {
    throw DegenerateProjection(
        "cannot project onto obstacle boundary from its center");
  }
  return obstacle.center + obstacle.radius * offset / distance;
}

TangentHalfplane tangent_halfplane(const CircleObstacle& obstacle,
                                   const Eigen::Vector2d& p) {
  const Eigen::Vector2d tangent = nearest_boundary_point(obstacle, p);
  const Eigen::Vector2d& c = obstacle.center;
  const double r = obstacle.radius;
  TangentHalfplane half;
  half.normal = tangent - c;
  half.offset = -(r * r - c.squaredNorm() + tangent.dot(c));
  half.tangent_point = tangent;
  return half;
}

void CbfSpec::validate() const {
  if (order < 1) {
    throw ConfigError("mpc.m_cbf", "barrier order must be >= 1");
  }
  if (gammas.size() != static_cast<std::size_t>(order)) {
    throw ConfigError("mpc.gammas", "expected " + std::to_string(order) +
                                        " values (one per order), got " +
                                        std::to_string(gammas.size()));
  }
  for (double gamma : gammas) {
    if (!gamma_in_range(gamma)) {
      throw ConfigError("mpc.gammas", "each gamma must lie in (0,1], got " +
                                          std::to_string(gamma));
    }
  }
  for (const auto& obstacle : obstacles) {
    if (!(obstacle.radius > 0.0)) {
      throw ConfigError("obstacles", "radius must be positive");
    }
  }
}

std::vector<double> psi_expansion(int order, std::span<const double> gammas) {
  if (order < 1) {
    throw UsageError("barrier order must be >= 1");
  }
  check_gammas(gammas, static_cast<std::size_t>(order - 1));
  // Multiply out prod_{s=1}^{order-1} (E + (gamma_s - 1)) where E shifts one
  // step ahead; coef[v] multiplies psi_0(x_{k+v}).
  std::vector<double> coef{1.0};
  for (int s = 0; s < order - 1; ++s) {
    const double decay = gammas[s] - 1.0;
    std::vector<double> next(coef.size() + 1, 0.0);
    for (std::size_t v = 0; v < coef.size(); ++v) {
      next[v] += decay * coef[v];
      next[v + 1] += coef[v];
    }
    coef = std::move(next);
  }
  return coef;
}

std::vector<double> z_coefficients(int order, std::span<const double> gammas) {
  const auto c = psi_expansion(order, gammas);
  std::vector<double> z(order + 1, 0.0);
  z[0] = c[0];
  for (int v = 1; v < order; ++v) {
    z[v] = -c[v];
  }
  return z;
}

std::vector<std::vector<double>> psi_sequence(std::span<const double> psi0,
                                              std::span<const double> gammas,
                                              int orders) {
  if (orders < 1) {
    throw UsageError("psi_sequence needs at least one order");
  }
  if (psi0.size() < static_cast<std::size_t>(orders)) {
    throw UsageError("psi_0 sequence too short for requested order");
  }
  check_gammas(gammas, static_cast<std::size_t>(orders - 1));
  std::vector<std::vector<double>> psi;
  psi.reserve(orders);
  psi.emplace_back(psi0.begin(), psi0.end());
  for (int i = 1; i < orders; ++i) {
    const auto& prev = psi.back();
    std::vector<double> cur(prev.size() - 1);
    for (std::size_t k = 0; k < cur.size(); ++k) {
      cur[k] = prev[k + 1] + (gammas[i - 1] - 1.0) * prev[k];
    }
    psi.push_back(std::move(cur));
  }
  return psi;
}

double PsiRow::evaluate(std::span<const double> psi0, double omega) const {
  double value = slack_coef * omega * psi0[0];
  for (std::size_t s = 0; s < psi0_coef.size(); ++s) {
    value += psi0_coef[s] * psi0[s];
  }
  return value;
}

PsiRow psi_row(int order, int step, std::span<const double> gammas) {
  if (step < 1) {
    throw UsageError("barrier rows start at step 1");
  }
  check_gammas(gammas, static_cast<std::size_t>(order));
  const auto c = psi_expansion(order, gammas);
  const auto z = z_coefficients(order, gammas);
  const double decay = std::pow(1.0 - gammas[order - 1], step);

  PsiRow row;
  row.order = order;
  row.step = step;
  row.psi0_coef.assign(static_cast<std::size_t>(step + order), 0.0);
  for (int v = 0; v < order; ++v) {
    row.psi0_coef[step + v] += c[v];
  }
  for (int v = 1; v <= order; ++v) {
    row.psi0_coef[v] += z[v] * decay;
  }
  row.slack_coef = -z[0] * decay;
  return row;
}

double HocbfRow::evaluate(std::span<const StateVec> states,
                          double omega) const {
  double value = constant + slack_coef * omega;
  for (const auto& term : terms) {
    value += term.coef * states[term.step](term.component);
  }
  return value;
}

int hocbf_row_count(const CbfSpec& spec, int horizon) {
  int per_obstacle = 0;
  for (int i = 1; i <= spec.order; ++i) {
    per_obstacle += std::max(0, horizon + 1 - i);
  }
  return per_obstacle * static_cast<int>(spec.obstacles.size());
}

std::vector<HocbfRow> hocbf_rows(std::span<const StateVec> nominal,
                                 const CbfSpec& spec) {
  if (nominal.empty()) {
    throw UsageError("hocbf_rows: empty nominal trajectory");
  }
  const int horizon = static_cast<int>(nominal.size()) - 1;
  std::vector<HocbfRow> rows;
  rows.reserve(hocbf_row_count(spec, horizon));

  std::vector<TangentHalfplane> halfplanes(nominal.size());
  for (std::size_t o = 0; o < spec.obstacles.size(); ++o) {
    const auto& obstacle = spec.obstacles[o];
    for (std::size_t k = 0; k < nominal.size(); ++k) {
      halfplanes[k] = tangent_halfplane(obstacle, spec.position.of(nominal[k]));
    }
    const double psi0_now = halfplanes[0](spec.position.of(nominal[0]));

    for (int i = 1; i <= spec.order; ++i) {
      for (int k = 1; k <= horizon + 1 - i; ++k) {
        const PsiRow form = psi_row(i, k, spec.gammas);
        HocbfRow row;
        row.obstacle = static_cast<int>(o);
        row.order = i;
        row.step = k;
        row.slack_coef = form.slack_coef * psi0_now;
        for (std::size_t s = 1; s < form.psi0_coef.size(); ++s) {
          const double coef = form.psi0_coef[s];
          if (coef == 0.0) {
            continue;
          }
          const auto& half = halfplanes[s];
          const int step = static_cast<int>(s);
          row.terms.push_back({step, spec.position.x, coef * half.normal.x()});
          row.terms.push_back({step, spec.position.y, coef * half.normal.y()});
          row.constant += coef * half.offset;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace impc
