#pragma once

// Scenario configuration: flat `key = value` text with dotted sections
// (`grid.n_r = 400`, `#` starts a comment), or the same keys nested as JSON.
// Unknown keys and malformed values are collected and reported together.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qhydro/errors.hpp"

namespace qhydro {

class ConfigError : public InvalidInput {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class StateKind { eigenstate, packet };
enum class RunDirection { forward, backward, both };
enum class ReportFormat { csv, json };

struct ScenarioConfig {
  // grid
  std::string chart = "polar";
  std::size_t n_r = 400;
  std::size_t n_theta = 64;
  double r_max = 8.0;
  std::size_t n_x = 128;
  std::size_t n_y = 128;
  double half_x = 8.0;
  double half_y = 8.0;

  // physics; natural units by default
  double mass = 1.0;
  double hbar = 1.0;
  double omega = 1.0;
  std::string potential = "oscillator";  // oscillator | free

  // state
  StateKind state = StateKind::eigenstate;
  double alpha = 0.0;
  int radial_nodes = 0;
  double x0 = 0.0, y0 = 0.0;
  double sigma_x = 1.0, sigma_y = 1.0;
  double kx = 0.0, ky = 0.0;
  double chirp = 0.0;

  // stochastic run
  std::size_t particles = 0;
  double dt = 1e-3;
  std::uint64_t steps = 1000;
  std::uint64_t seed = 1;
  RunDirection direction = RunDirection::forward;
  std::size_t hist_n_r = 20;
  std::size_t hist_n_theta = 8;
  double hist_r_max = 4.0;

  // evolution
  double evolve_dt = 1e-3;
  double horizon = 1.0;
  std::size_t audit_every = 100;

  // eigenstate checks
  double loop_radius = 1.0;

  // outputs
  std::string out_dir = "out";
  ReportFormat format = ReportFormat::json;
};

/// Every recognised key, sorted.
std::vector<std::string> config_keys();

/// Parses `key = value` text. Throws ConfigError listing every offending key.
ScenarioConfig parse_config_text(const std::string& text);
/// Parses a JSON object whose nesting mirrors the dotted keys.
ScenarioConfig parse_config_json(const std::string& text);
/// Dispatches on the file extension (.json or anything else).
ScenarioConfig load_config(const std::string& path);

/// Applies key/value pairs on top of `base`, validating the result.
ScenarioConfig apply_config(const std::map<std::string, std::string>& values, ScenarioConfig base = {});

}  // namespace qhydro
