#include "impc/cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "impc/error.hpp"

namespace impc::cli {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr int kUnicycleStates = 4;
constexpr int kUnicycleInputs = 2;

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string indexed(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) {
    throw ConfigError(path.empty() ? "config" : path, "expected a JSON object");
  }
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError(join(path, key), "unknown key");
  }
}

const json& field(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(path, key), "missing");
  return *it;
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(key, "must be finite");
  return d;
}

long long integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  return v.get<long long>();
}

Eigen::VectorXd vector(const json& v, const std::string& key, int size) {
  if (!v.is_array()) throw ConfigError(key, "expected an array");
  if (size >= 0 && v.size() != static_cast<std::size_t>(size)) {
    throw ConfigError(key, "expected " + std::to_string(size) + " entries, got " +
                               std::to_string(v.size()));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = number(v[i], indexed(key, i));
  }
  return out;
}

Eigen::MatrixXd diagonal(const json& v, const std::string& key, int size) {
  const Eigen::VectorXd d = vector(v, key, size);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) < 0.0) throw ConfigError(key, "weights must be nonnegative");
  }
  return d.asDiagonal();
}

std::vector<double> gamma_list(const json& v, const std::string& key,
                               int order) {
  const Eigen::VectorXd g = vector(v, key, order);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!(g(i) > 0.0 && g(i) <= 1.0)) {
      throw ConfigError(key, "each gamma must lie in (0,1], got " +
                                 format_number(g(i)));
    }
  }
  return {g.data(), g.data() + g.size()};
}

int barrier_order(const json& v, const std::string& key) {
  const long long order = integer(v, key);
  if (order < 1 || order > 16) throw ConfigError(key, "must be in 1..16");
  return static_cast<int>(order);
}

Model parse_model(const json& j) {
  expect_object(j, "model");
  reject_unknown(j, "model", {"type", "dt"});
  const json& type = field(j, "model", "type");
  if (!type.is_string() || type.get<std::string>() != "unicycle") {
    throw ConfigError("model.type", "only \"unicycle\" is supported");
  }
  const double dt = number(field(j, "model", "dt"), "model.dt");
  if (!(dt > 0.0)) throw ConfigError("model.dt", "must be positive");
  return unicycle(dt);
}

std::vector<CircleObstacle> parse_obstacles(const json& j) {
  if (!j.is_array()) throw ConfigError("obstacles", "expected an array");
  std::vector<CircleObstacle> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = indexed("obstacles", i);
    expect_object(j[i], path);
    reject_unknown(j[i], path, {"center", "radius"});
    const Eigen::VectorXd c = vector(field(j[i], path, "center"),
                                     join(path, "center"), 2);
    const double r = number(field(j[i], path, "radius"), join(path, "radius"));
    if (!(r > 0.0)) throw ConfigError(join(path, "radius"), "must be positive");
    out.push_back(CircleObstacle::make(Eigen::Vector2d(c(0), c(1)), r));
  }
  return out;
}

BenchConfig parse_bench(const json* j, const CbfSpec& cbf) {
  BenchConfig bench;
  bench.horizons = {4, 8, 12, 16, 20, 24};
  bench.settings = {BenchSetting{cbf.order, cbf.gammas}};
  if (j == nullptr) return bench;
  expect_object(*j, "bench");
  reject_unknown(*j, "bench", {"trials", "seed", "horizons", "settings"});
  if (j->contains("trials")) {
    const long long t = integer((*j)["trials"], "bench.trials");
    if (t < 1 || t > 100'000'000) throw ConfigError("bench.trials", "must be >= 1");
    bench.trials = static_cast<int>(t);
  }
  if (j->contains("seed")) {
    const json& s = (*j)["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("bench.seed", "expected a nonnegative integer");
    }
    bench.seed = s.get<std::uint64_t>();
  }
  if (j->contains("horizons")) {
    const json& h = (*j)["horizons"];
    if (!h.is_array() || h.empty()) {
      throw ConfigError("bench.horizons", "expected a nonempty array");
    }
    bench.horizons.clear();
    for (std::size_t i = 0; i < h.size(); ++i) {
      const long long n = integer(h[i], indexed("bench.horizons", i));
      if (n < 1 || n > 10'000) {
        throw ConfigError(indexed("bench.horizons", i), "must be >= 1");
      }
      bench.horizons.push_back(static_cast<int>(n));
    }
  }
  if (j->contains("settings")) {
    const json& s = (*j)["settings"];
    if (!s.is_array() || s.empty()) {
      throw ConfigError("bench.settings", "expected a nonempty array");
    }
    bench.settings.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string path = indexed("bench.settings", i);
      expect_object(s[i], path);
      reject_unknown(s[i], path, {"m_cbf", "gammas"});
      BenchSetting setting;
      setting.order = barrier_order(field(s[i], path, "m_cbf"), join(path, "m_cbf"));
      setting.gammas = gamma_list(field(s[i], path, "gammas"),
                                  join(path, "gammas"), setting.order);
      bench.settings.push_back(std::move(setting));
    }
  }
  return bench;
}

ordered_json to_array(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void append(std::string& line, double value) {
  line += format_number(value);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot open " + path + " for writing");
  return out;
}

}  // namespace

std::string format_number(double value) {
  // Plain decimal (no exponent) with 15 significant digits.
  if (value == 0.0 || !std::isfinite(value)) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
  }
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
  const int precision = std::max(0, 14 - exponent);
  std::array<char, 1024> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed, precision);
  std::string out(buf.data(), res.ptr);
  if (out.find('.') != std::string::npos) {
    out.erase(out.find_last_not_of('0') + 1);
    if (out.back() == '.') out.pop_back();
  }
  return out;
}

ScenarioFile parse_scenario(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  expect_object(root, "");
  reject_unknown(root, "",
                 {"model", "initial_state", "target_state", "input_ref",
                  "omega_ref", "obstacles", "mpc", "bounds", "convergence",
                  "t_sim", "bench"});

  Model model = parse_model(field(root, "", "model"));
  const int nx = kUnicycleStates;
  const int nu = kUnicycleInputs;

  const StateVec x0 = vector(field(root, "", "initial_state"), "initial_state", nx);
  const StateVec target = vector(field(root, "", "target_state"), "target_state", nx);
  const InputVec u_ref = vector(field(root, "", "input_ref"), "input_ref", nu);
  const json& omega_json = field(root, "", "omega_ref");
  std::vector<CircleObstacle> obstacles = parse_obstacles(field(root, "", "obstacles"));

  const json& mpc = field(root, "", "mpc");
  expect_object(mpc, "mpc");
  reject_unknown(mpc, "mpc",
                 {"N", "m_cbf", "gammas", "Q_diag", "R_diag", "S_diag", "P_diag"});
  const long long horizon = integer(field(mpc, "mpc", "N"), "mpc.N");
  if (horizon < 1 || horizon > 10'000) throw ConfigError("mpc.N", "must be >= 1");
  const int order = barrier_order(field(mpc, "mpc", "m_cbf"), "mpc.m_cbf");
  std::vector<double> gammas = gamma_list(field(mpc, "mpc", "gammas"), "mpc.gammas", order);
  CostWeights weights;
  weights.Q = diagonal(field(mpc, "mpc", "Q_diag"), "mpc.Q_diag", nx);
  weights.R = diagonal(field(mpc, "mpc", "R_diag"), "mpc.R_diag", nu);
  weights.S = diagonal(field(mpc, "mpc", "S_diag"), "mpc.S_diag", order);
  weights.P_term = diagonal(field(mpc, "mpc", "P_diag"), "mpc.P_diag", nx);
  weights.x_ref = target;
  weights.u_ref = u_ref;
  weights.omega_ref = vector(omega_json, "omega_ref", order);

  const json& b = field(root, "", "bounds");
  expect_object(b, "bounds");
  reject_unknown(b, "bounds", {"x_min", "x_max", "u_min", "u_max"});
  Bounds bounds;
  bounds.x_min = vector(field(b, "bounds", "x_min"), "bounds.x_min", nx);
  bounds.x_max = vector(field(b, "bounds", "x_max"), "bounds.x_max", nx);
  bounds.u_min = vector(field(b, "bounds", "u_min"), "bounds.u_min", nu);
  bounds.u_max = vector(field(b, "bounds", "u_max"), "bounds.u_max", nu);

  const json& c = field(root, "", "convergence");
  expect_object(c, "convergence");
  reject_unknown(c, "convergence", {"eps_abs", "eps_rel", "j_max"});
  ConvergenceConfig conv;
  conv.eps_abs = number(field(c, "convergence", "eps_abs"), "convergence.eps_abs");
  conv.eps_rel = number(field(c, "convergence", "eps_rel"), "convergence.eps_rel");
  const long long j_max = integer(field(c, "convergence", "j_max"), "convergence.j_max");
  if (j_max < 1 || j_max > 1'000'000) {
    throw ConfigError("convergence.j_max", "must be >= 1");
  }
  conv.j_max = static_cast<int>(j_max);

  const long long t_sim = integer(field(root, "", "t_sim"), "t_sim");
  if (t_sim < 0 || t_sim > 1'000'000) throw ConfigError("t_sim", "must be >= 0");

  CbfSpec cbf;
  cbf.order = order;
  cbf.gammas = std::move(gammas);
  cbf.obstacles = std::move(obstacles);

  ScenarioFile file{
      Scenario{MpcConfig{std::move(model), cbf, std::move(weights),
                         std::move(bounds), conv, static_cast<int>(horizon), {}},
               x0, static_cast<int>(t_sim)},
      {}};
  file.scenario.validate();
  file.bench = parse_bench(root.contains("bench") ? &root["bench"] : nullptr, cbf);
  file.bench.validate();
  return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::string normalized_echo(const ScenarioFile& file) {
  const Scenario& s = file.scenario;
  const MpcConfig& m = s.mpc;
  ordered_json j;
  j["model"] = {{"type", "unicycle"}, {"dt", m.model.dt()}};
  j["initial_state"] = to_array(s.initial_state);
  j["target_state"] = to_array(m.weights.x_ref);
  j["input_ref"] = to_array(m.weights.u_ref);
  j["omega_ref"] = to_array(m.weights.omega_ref);
  j["obstacles"] = ordered_json::array();
  for (const auto& o : m.cbf.obstacles) {
    j["obstacles"].push_back(
        {{"center", {o.center.x(), o.center.y()}}, {"radius", o.radius}});
  }
  j["mpc"] = {{"N", m.horizon},
              {"m_cbf", m.cbf.order},
              {"gammas", m.cbf.gammas},
              {"Q_diag", to_array(m.weights.Q.diagonal())},
              {"R_diag", to_array(m.weights.R.diagonal())},
              {"S_diag", to_array(m.weights.S.diagonal())},
              {"P_diag", to_array(m.weights.P_term.diagonal())}};
  j["bounds"] = {{"x_min", to_array(m.bounds.x_min)},
                 {"x_max", to_array(m.bounds.x_max)},
                 {"u_min", to_array(m.bounds.u_min)},
                 {"u_max", to_array(m.bounds.u_max)}};
  j["convergence"] = {{"eps_abs", m.convergence.eps_abs},
                      {"eps_rel", m.convergence.eps_rel},
                      {"j_max", m.convergence.j_max}};
  j["t_sim"] = s.t_sim;
  ordered_json settings = ordered_json::array();
  for (const auto& st : file.bench.settings) {
    settings.push_back({{"m_cbf", st.order}, {"gammas", st.gammas}});
  }
  j["bench"] = {{"trials", file.bench.trials},
                {"seed", file.bench.seed},
                {"horizons", file.bench.horizons},
                {"settings", settings}};
  return j.dump(2) + "\n";
}

void write_trajectory_csv(std::ostream& out, const ClosedLoopResult& result) {
  out << "t,x,y,theta,v,u1,u2,j_conv,converged,feasible,e_abs,e_rel,h_min,"
         "solve_ms\n";
  std::string line;
  for (std::size_t t = 0; t < result.states.size(); ++t) {
    const StateVec& x = result.states[t];
    line = std::to_string(t);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      line += ',';
      append(line, x(i));
    }
    if (t < result.inputs.size()) {
      for (Eigen::Index i = 0; i < result.inputs[t].size(); ++i) {
        line += ',';
        append(line, result.inputs[t](i));
      }
    } else {
      line += ",,";
    }
    if (t < result.reports.size()) {
      const SolveReport& r = result.reports[t];
      line += ',' + std::to_string(r.iterations);
      line += r.converged ? ",1" : ",0";
      line += r.feasible ? ",1" : ",0";
      line += ',';
      append(line, r.e_abs);
      line += ',';
      append(line, r.e_rel);
      line += ',';
      append(line, r.h_min);
      line += ',';
      append(line, r.wall_time * 1e3);
    } else {
      line += ",,,,,,,";
    }
    line += '\n';
    out << line;
  }
}

void write_bench_csv(std::ostream& out, const BenchResult& result) {
  out << "N,m_cbf,gamma1,gamma2,trials,mean_s,std_s,infeas_rate\n";
  for (const auto& row : result.rows) {
    std::string line = std::to_string(row.horizon) + ',' +
                       std::to_string(row.setting.order) + ',';
    if (!row.setting.gammas.empty()) append(line, row.setting.gammas[0]);
    line += ',';
    if (row.setting.gammas.size() > 1) append(line, row.setting.gammas[1]);
    line += ',' + std::to_string(row.trials) + ',';
    append(line, row.mean_s);
    line += ',';
    append(line, row.std_s);
    line += ',';
    append(line, row.infeasibility_rate());
    line += '\n';
    out << line;
  }
}

std::vector<int> parse_horizon_list(std::string_view text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, comma - pos);
    int value = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || res.ec != std::errc() ||
        res.ptr != item.data() + item.size() || value < 1) {
      throw ConfigError("horizons", "expected a comma-separated list of positive "
                                    "integers, got \"" + std::string(text) + "\"");
    }
    out.push_back(value);
    pos = comma + 1;
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative convex MPC with discrete-time high-order CBFs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<int> t_sim;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::string horizons;

  auto* sim = app.add_subcommand("sim", "Run the closed loop and write a trajectory CSV");
  sim->add_option("--config", config_path, "Scenario JSON")->required();
  sim->add_option("--out", out_path, "Output CSV")->required();
  sim->add_option("--t-sim", t_sim, "Override the number of simulated steps");

  auto* bench = app.add_subcommand("bench", "Randomized-state feasibility and timing benchmark");
  bench->add_option("--config", config_path, "Scenario JSON")->required();
  bench->add_option("--trials", trials, "Trials per row");
  bench->add_option("--seed", seed, "Master seed");
  bench->add_option("--horizons", horizons, "Comma-separated horizons, e.g. 4,8,12");
  bench->add_option("--out", out_path, "Output CSV")->required();

  auto* validate = app.add_subcommand("validate", "Parse and echo a scenario");
  validate->add_option("--config", config_path, "Scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    ScenarioFile file = load_scenario(config_path);

    if (*validate) {
      out << normalized_echo(file);
      return 0;
    }

    if (*sim) {
      if (t_sim) {
        if (*t_sim < 0) throw ConfigError("t-sim", "must be >= 0");
        file.scenario.t_sim = *t_sim;
      }
      const ClosedLoopResult result = closed_loop(file.scenario);
      std::ofstream csv = open_output(out_path);
      write_trajectory_csv(csv, result);
      csv.close();
      if (!csv) throw ConfigError("out", "failed writing " + out_path);
      if (!result.completed) {
        err << "stopped at t=" << result.completed_steps()
            << ": CFTOC infeasible\n";
        return 2;
      }
      return 0;
    }

    if (*bench) {
      if (trials) {
        if (*trials < 1) throw ConfigError("trials", "must be >= 1");
        file.bench.trials = *trials;
      }
      if (seed) file.bench.seed = *seed;
      if (!horizons.empty()) file.bench.horizons = parse_horizon_list(horizons);
      const BenchResult result = run_bench(file.bench, file.scenario.mpc);
      std::ofstream csv = open_output(out_path);
      write_bench_csv(csv, result);
      csv.close();
      if (!csv) throw ConfigError("out", "failed writing " + out_path);
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace impc::cli
