#include "impc/bench.hpp"

#include <cmath>
#include <string>

#include "impc/error.hpp"

namespace impc {

namespace {

constexpr long kMaxRejections = 1'000'000;

}  // namespace

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

SplitMix64 trial_rng(std::uint64_t master_seed, std::uint64_t index) {
  SplitMix64 mix(master_seed);
  const std::uint64_t base = mix.next();
  SplitMix64 derived(base ^ (index * 0xd1b54a32d192ed03ULL));
  return SplitMix64(derived.next());
}

StateVec sample_safe_state(SplitMix64& rng, const Bounds& bounds,
                           std::span<const CircleObstacle> obstacles,
                           PositionIndices position) {
  const auto nx = bounds.x_min.size();
  if (bounds.x_max.size() != nx) {
    throw UsageError("sample_safe_state: bound sizes differ");
  }
  StateVec x(nx);
  for (long attempt = 0; attempt < kMaxRejections; ++attempt) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      x(i) = bounds.x_min(i) + (bounds.x_max(i) - bounds.x_min(i)) * rng.uniform();
    }
    bool safe = true;
    for (const auto& obstacle : obstacles) {
      if (!(obstacle.clearance(position.of(x)) > 0.0)) {
        safe = false;
        break;
      }
    }
    if (safe) return x;
  }
  throw ConfigError("bench", "no safe state found in " +
                                 std::to_string(kMaxRejections) +
                                 " samples; obstacles cover the state box");
}

void BenchConfig::validate() const {
  if (trials < 1) {
    throw ConfigError("bench.trials", "must be >= 1");
  }
  if (horizons.empty()) {
    throw ConfigError("bench.horizons", "must list at least one horizon");
  }
  for (int n : horizons) {
    if (n < 1) throw ConfigError("bench.horizons", "horizons must be >= 1");
  }
  if (settings.empty()) {
    throw ConfigError("bench.settings", "must list at least one setting");
  }
  for (const auto& s : settings) {
    CbfSpec spec;
    spec.order = s.order;
    spec.gammas = s.gammas;
    try {
      spec.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("bench.settings", e.what());
    }
  }
}

BenchResult run_bench(const BenchConfig& config, const MpcConfig& base) {
  config.validate();

  // States are drawn once so every row sees the same trials.
  std::vector<StateVec> starts;
  starts.reserve(config.trials);
  for (int i = 0; i < config.trials; ++i) {
    SplitMix64 rng = trial_rng(config.seed, static_cast<std::uint64_t>(i));
    starts.push_back(sample_safe_state(rng, base.bounds, base.cbf.obstacles,
                                       base.cbf.position));
  }

  BenchResult result;
  for (const auto& setting : config.settings) {
    for (int horizon : config.horizons) {
      MpcConfig mpc = base;
      mpc.horizon = horizon;
      mpc.cbf.order = setting.order;
      mpc.cbf.gammas = setting.gammas;
      const Eigen::MatrixXd S = base.weights.S;
      const Eigen::VectorXd w_ref = base.weights.omega_ref;
      if (S.rows() != setting.order) {
        // Slack weights are per order; reuse the leading diagonal entry.
        mpc.weights.S = Eigen::MatrixXd::Identity(setting.order, setting.order) *
                        S(0, 0);
        mpc.weights.omega_ref = Eigen::VectorXd::Constant(setting.order, w_ref(0));
      }
      mpc.validate();

      BenchRow row;
      row.horizon = horizon;
      row.setting = setting;
      row.trials = config.trials;
      double sum = 0.0;
      double sum_sq = 0.0;
      int feasible = 0;
      std::vector<double> times;
      for (const auto& x0 : starts) {
        const Trajectory warm = zero_warm_start(mpc.model, x0, horizon);
        const StepResult step = impc_step(mpc, x0, warm);
        if (!step.report.feasible) {
          ++row.infeasible;
          continue;
        }
        times.push_back(step.report.wall_time);
        sum += step.report.wall_time;
        ++feasible;
      }
      if (feasible > 0) {
        row.mean_s = sum / feasible;
        for (double t : times) sum_sq += (t - row.mean_s) * (t - row.mean_s);
        row.std_s = feasible > 1 ? std::sqrt(sum_sq / (feasible - 1)) : 0.0;
      }
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

}  // namespace impc
