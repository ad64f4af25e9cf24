#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "qhydro/config.hpp"

using namespace qhydro;

namespace {

std::vector<std::string> problems_of(const std::string& text, bool json = false) {
  try {
    json ? parse_config_json(text) : parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& key) {
  return std::any_of(problems.begin(), problems.end(), [&](const std::string& p) { return p.rfind(key, 0) == 0; });
}

}  // namespace

TEST_CASE("defaults") {
  const ScenarioConfig c = parse_config_text("");
  CHECK(c.chart == "polar");
  CHECK(c.n_r == 400);
  CHECK(c.mass == 1.0);
  CHECK(c.state == StateKind::eigenstate);
  CHECK(c.direction == RunDirection::forward);
  CHECK(c.format == ReportFormat::json);
}

TEST_CASE("text configuration") {
  const ScenarioConfig c = parse_config_text(R"(# a vortex state
grid.n_r = 1000
grid.n_theta=32   # trailing comment
physics.mass = 2.5
state.kind = packet
state.sigma_x = 0.4
run.direction = both
run.seed = 18446744073709551615
output.format = csv
)");
  CHECK(c.n_r == 1000);
  CHECK(c.n_theta == 32);
  CHECK(c.mass == 2.5);
  CHECK(c.state == StateKind::packet);
  CHECK(c.sigma_x == 0.4);
  CHECK(c.direction == RunDirection::both);
  CHECK(c.seed == 18446744073709551615ull);
  CHECK(c.format == ReportFormat::csv);
}

TEST_CASE("json configuration mirrors the dotted keys") {
  const ScenarioConfig c = parse_config_json(R"({"grid": {"n_r": 300, "chart": "polar"},
    "state": {"kind": "eigenstate", "alpha": 1}, "physics": {"omega": "2.0"}})");
  CHECK(c.n_r == 300);
  CHECK(c.alpha == 1.0);
  CHECK(c.omega == 2.0);
  CHECK(mentions(problems_of(R"({"grid": {"n_r": [1, 2]}})", true), "grid.n_r"));
  CHECK_THROWS_AS(parse_config_json("{not json"), InvalidInput);
}

TEST_CASE("every problem is reported at once") {
  const auto p = problems_of("grid.n_r = 2\nphysics.mass = -1\nbogus.key = 3\nrun.dt = abc\nphysics.potential = morse\n");
  CHECK(p.size() == 5);
  CHECK(mentions(p, "grid.n_r"));
  CHECK(mentions(p, "physics.mass"));
  CHECK(mentions(p, "bogus.key: unknown key"));
  CHECK(mentions(p, "run.dt"));
  CHECK(mentions(p, "physics.potential"));
}

TEST_CASE("malformed lines and duplicates") {
  CHECK_FALSE(problems_of("grid.n_r 400\n").empty());
  CHECK_FALSE(problems_of("grid.n_r = 400\ngrid.n_r = 500\n").empty());
  CHECK(mentions(problems_of("physics.hbar = nan\n"), "physics.hbar"));
  CHECK(mentions(problems_of("physics.hbar = inf\n"), "physics.hbar"));
  CHECK(mentions(problems_of("grid.n_r = 12abc\n"), "grid.n_r"));
  CHECK(mentions(problems_of("run.steps = 0\n"), "run.steps"));
}

TEST_CASE("cross checks") {
  CHECK(mentions(problems_of("grid.n_theta = 31\n"), "grid.n_theta"));
  CHECK(mentions(problems_of("histogram.n_theta = 5\n"), "histogram.n_theta"));
  CHECK(mentions(problems_of("grid.chart = cartesian\nstate.kind = eigenstate\n"), "state.kind"));
  CHECK(problems_of("grid.chart = cartesian\nstate.kind = packet\n").empty());
  // a winding of 8 needs more than 64 angular cells
  CHECK(mentions(problems_of("state.alpha = 8\n"), "grid.n_theta"));
  CHECK(problems_of("state.alpha = 7.5\n").empty());
}

TEST_CASE("keys are listed and overrides validate") {
  const auto keys = config_keys();
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(std::find(keys.begin(), keys.end(), "run.particles") != keys.end());
  ScenarioConfig base;
  base.n_r = 50;
  const ScenarioConfig c = apply_config({{"run.seed", "9"}}, base);
  CHECK(c.seed == 9);
  CHECK(c.n_r == 50);
  CHECK_THROWS_AS(apply_config({{"run.seed", "-1"}}, base), ConfigError);
}

TEST_CASE("load_config dispatches on the extension") {
  const auto dir = std::filesystem::temp_directory_path() / "qhydro_config_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "a.json") << R"({"grid": {"n_r": 77}})";
  std::ofstream(dir / "a.cfg") << "grid.n_r = 78\n";
  CHECK(load_config((dir / "a.json").string()).n_r == 77);
  CHECK(load_config((dir / "a.cfg").string()).n_r == 78);
  CHECK_THROWS_AS(load_config((dir / "missing.cfg").string()), InvalidInput);
  std::filesystem::remove_all(dir);
}
