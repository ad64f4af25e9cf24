#include "qhydro/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace qhydro {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : "; ") + p;
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

template <class Int>
bool parse_int(const std::string& s, Int& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

using Setter = std::function<std::string(ScenarioConfig&, const std::string&)>;

Setter real(double ScenarioConfig::*field, bool positive) {
  return [=](ScenarioConfig& c, const std::string& v) -> std::string {
    double x;
    if (!parse_double(v, x)) return "expected a finite number";
    if (positive && !(x > 0.0)) return "must be positive";
    c.*field = x;
    return "";
  };
}

template <class Int>
Setter integer(Int ScenarioConfig::*field, Int minimum) {
  return [=](ScenarioConfig& c, const std::string& v) -> std::string {
    Int x;
    if (!parse_int(v, x)) return "expected an integer";
    if (x < minimum) return "must be at least " + std::to_string(minimum);
    c.*field = x;
    return "";
  };
}

template <class E>
Setter choice(E ScenarioConfig::*field, std::map<std::string, E> options) {
  return [=](ScenarioConfig& c, const std::string& v) -> std::string {
    const auto it = options.find(v);
    if (it == options.end()) {
      std::string names;
      for (const auto& [k, unused] : options) names += (names.empty() ? "" : "|") + k;
      return "expected one of " + names;
    }
    c.*field = it->second;
    return "";
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"grid.chart", choice(&ScenarioConfig::chart, std::map<std::string, std::string>{{"polar", "polar"},
                                                                                       {"cartesian", "cartesian"}})},
      {"grid.n_r", integer<std::size_t>(&ScenarioConfig::n_r, 3)},
      {"grid.n_theta", integer<std::size_t>(&ScenarioConfig::n_theta, 4)},
      {"grid.r_max", real(&ScenarioConfig::r_max, true)},
      {"grid.n_x", integer<std::size_t>(&ScenarioConfig::n_x, 3)},
      {"grid.n_y", integer<std::size_t>(&ScenarioConfig::n_y, 3)},
      {"grid.half_x", real(&ScenarioConfig::half_x, true)},
      {"grid.half_y", real(&ScenarioConfig::half_y, true)},
      {"physics.mass", real(&ScenarioConfig::mass, true)},
      {"physics.hbar", real(&ScenarioConfig::hbar, true)},
      {"physics.omega", real(&ScenarioConfig::omega, true)},
      {"physics.potential",
       choice(&ScenarioConfig::potential,
              std::map<std::string, std::string>{{"oscillator", "oscillator"}, {"free", "free"}})},
      {"state.kind", choice(&ScenarioConfig::state, std::map<std::string, StateKind>{
                                                        {"eigenstate", StateKind::eigenstate},
                                                        {"packet", StateKind::packet}})},
      {"state.alpha", real(&ScenarioConfig::alpha, false)},
      {"state.n_r", integer<int>(&ScenarioConfig::radial_nodes, 0)},
      {"state.x0", real(&ScenarioConfig::x0, false)},
      {"state.y0", real(&ScenarioConfig::y0, false)},
      {"state.sigma_x", real(&ScenarioConfig::sigma_x, true)},
      {"state.sigma_y", real(&ScenarioConfig::sigma_y, true)},
      {"state.kx", real(&ScenarioConfig::kx, false)},
      {"state.ky", real(&ScenarioConfig::ky, false)},
      {"state.chirp", real(&ScenarioConfig::chirp, false)},
      {"run.particles", integer<std::size_t>(&ScenarioConfig::particles, 0)},
      {"run.dt", real(&ScenarioConfig::dt, true)},
      {"run.steps", integer<std::uint64_t>(&ScenarioConfig::steps, 1)},
      {"run.seed", integer<std::uint64_t>(&ScenarioConfig::seed, 0)},
      {"run.direction", choice(&ScenarioConfig::direction, std::map<std::string, RunDirection>{
                                                               {"forward", RunDirection::forward},
                                                               {"backward", RunDirection::backward},
                                                               {"both", RunDirection::both}})},
      {"histogram.n_r", integer<std::size_t>(&ScenarioConfig::hist_n_r, 1)},
      {"histogram.n_theta", integer<std::size_t>(&ScenarioConfig::hist_n_theta, 4)},
      {"histogram.r_max", real(&ScenarioConfig::hist_r_max, true)},
      {"evolve.dt", real(&ScenarioConfig::evolve_dt, true)},
      {"evolve.horizon", real(&ScenarioConfig::horizon, true)},
      {"evolve.audit_every", integer<std::size_t>(&ScenarioConfig::audit_every, 1)},
      {"eigen.loop_radius", real(&ScenarioConfig::loop_radius, true)},
      {"output.dir",
       [](ScenarioConfig& c, const std::string& v) -> std::string {
         if (v.empty()) return "must not be empty";
         c.out_dir = v;
         return "";
       }},
      {"output.format", choice(&ScenarioConfig::format, std::map<std::string, ReportFormat>{
                                                            {"csv", ReportFormat::csv},
                                                            {"json", ReportFormat::json}})},
  };
  return table;
}

void cross_check(const ScenarioConfig& c, std::vector<std::string>& problems) {
  if (c.chart == "polar" && c.n_theta % 2 != 0) problems.push_back("grid.n_theta: must be even");
  if (c.hist_n_theta % 2 != 0) problems.push_back("histogram.n_theta: must be even");
  if (c.state == StateKind::eigenstate && c.chart != "polar")
    problems.push_back("state.kind: eigenstates need grid.chart = polar");
  // the phase gradient resolves less than pi/2 of phase per two angular cells
  if (c.state == StateKind::eigenstate && c.chart == "polar" && static_cast<double>(c.n_theta) <= 8.0 * std::abs(c.alpha))
    problems.push_back("grid.n_theta: must exceed 8 |state.alpha| to resolve the angular phase");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : InvalidInput("invalid configuration: " + join(problems)), problems_(std::move(problems)) {}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, unused] : setters()) keys.push_back(k);
  return keys;
}

ScenarioConfig apply_config(const std::map<std::string, std::string>& values, ScenarioConfig base) {
  std::vector<std::string> problems;
  for (const auto& [key, value] : values) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
      problems.push_back(key + ": unknown key");
      continue;
    }
    const std::string err = it->second(base, value);
    if (!err.empty()) problems.push_back(key + ": " + err + " (got '" + value + "')");
  }
  cross_check(base, problems);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return base;
}

ScenarioConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> values;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(number) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    if (values.count(key)) problems.push_back(key + ": given more than once");
    values[key] = trim(line.substr(eq + 1));
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return apply_config(values);
}

ScenarioConfig parse_config_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("json: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"json: top level must be an object"});
  std::map<std::string, std::string> values;
  std::vector<std::string> problems;
  const auto flat = doc.flatten();
  for (const auto& [pointer, value] : flat.items()) {
    std::string key = pointer.substr(1);
    for (auto& ch : key)
      if (ch == '/') ch = '.';
    if (value.is_string()) {
      values[key] = value.get<std::string>();
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      values[key] = value.dump();
    } else if (value.is_number_float()) {
      // dump() round-trips doubles exactly
      values[key] = value.dump();
    } else {
      problems.push_back(key + ": unsupported value " + value.dump());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return apply_config(values);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return json ? parse_config_json(buf.str()) : parse_config_text(buf.str());
}

}  // namespace qhydro
