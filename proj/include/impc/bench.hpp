#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "impc/cbf.hpp"
#include "impc/cftoc.hpp"
#include "impc/impc.hpp"

namespace impc {

/// SplitMix64 stream. Used to derive independent per-trial generators from
/// one master seed, so trial i sees the same states for every horizon and
/// setting regardless of execution order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t state_;
};

/// Generator for trial `index` of a run seeded with `master_seed`.
SplitMix64 trial_rng(std::uint64_t master_seed, std::uint64_t index);

/// Uniform sample over the state box, resampled until h > 0 for every
/// obstacle. Throws ConfigError("bench", ...) after 10^6 consecutive
/// rejections.
StateVec sample_safe_state(SplitMix64& rng, const Bounds& bounds,
                           std::span<const CircleObstacle> obstacles,
                           PositionIndices position = {});

/// One barrier configuration to benchmark.
struct BenchSetting {
  int order = 2;
  std::vector<double> gammas;
};

struct BenchConfig {
  int trials = 1000;
  std::uint64_t seed = 0;
  std::vector<int> horizons;
  std::vector<BenchSetting> settings;

  /// Throws ConfigError for trials < 1, an empty or non-positive horizon
  /// list, or an invalid setting.
  void validate() const;
};

struct BenchRow {
  int horizon = 0;
  BenchSetting setting;
  int trials = 0;
  int infeasible = 0;
  double mean_s = 0.0;  ///< over feasible trials
  double std_s = 0.0;   ///< sample standard deviation over feasible trials

  double infeasibility_rate() const {
    return trials > 0 ? static_cast<double>(infeasible) / trials : 0.0;
  }
};

/// Rows ordered setting-major, then by horizon as listed.
struct BenchResult {
  std::vector<BenchRow> rows;
};

/// For each (setting, horizon) pair, runs one impc_step per trial from a
/// sampled safe state with a zero-input warm start. `base` supplies the
/// model, weights, bounds, obstacles and convergence settings; its horizon
/// and barrier order/gammas are overridden per row. When a setting's order
/// differs from the size of base S, S becomes s_00 * I and omega_ref is
/// filled with its first entry.
BenchResult run_bench(const BenchConfig& config, const MpcConfig& base);

}  // namespace impc
