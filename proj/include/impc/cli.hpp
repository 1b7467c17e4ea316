#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "impc/bench.hpp"
#include "impc/impc.hpp"

namespace impc::cli {

/// A parsed scenario document: the closed-loop setup plus benchmark defaults
/// (from the optional "bench" object).
struct ScenarioFile {
  Scenario scenario;
  BenchConfig bench;
};

/// Parses and validates a scenario JSON document. Every failure is reported
/// as ConfigError whose key is the dotted path of the first offending entry.
ScenarioFile parse_scenario(std::string_view json_text);

/// Reads `path` and parses it. A missing or unreadable file is a ConfigError
/// with key "config".
ScenarioFile load_scenario(const std::filesystem::path& path);

/// Canonical JSON rendering of a parsed scenario (all keys, fixed order,
/// two-space indent).
std::string normalized_echo(const ScenarioFile& file);

/// Locale-independent plain decimal formatting (no exponent), 15 significant
/// digits, trailing zeros trimmed.
std::string format_number(double value);

/// One row per recorded state: x(t), the input applied at t and the report of
/// step t. The final state row has empty input fields; its report fields are
/// empty too unless the run stopped there on an infeasible step.
void write_trajectory_csv(std::ostream& out, const ClosedLoopResult& result);

void write_bench_csv(std::ostream& out, const BenchResult& result);

/// Parses "4,8,12" into horizons. Throws ConfigError("horizons", ...).
std::vector<int> parse_horizon_list(std::string_view text);

/// Command entry point; returns the process exit code. Diagnostics go to
/// `err`, normal output (validate echo) to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace impc::cli
