#include "qhydro/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qhydro/config.hpp"
#include "qhydro/eigensolver.hpp"
#include "qhydro/evolution.hpp"
#include "qhydro/io.hpp"
#include "qhydro/states.hpp"
#include "qhydro/uncertainty.hpp"

namespace qhydro {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr double kGridMarginTolerance = 1e-6;
constexpr double kEnsembleSigmas = 3.0;

struct QuantizationViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scenario {
  ScenarioConfig cfg;
  PhysicalParams params;
  std::shared_ptr<const Grid> grid;
  std::optional<EigenstateSpec> spec;
  MadelungState state;
  VelocityFields fields;
  ComplexField psi;  // empty for unquantised eigenstates
};

bool is_integer(double x) { return std::abs(x - std::round(x)) <= 1e-12; }

Scenario build(const ScenarioConfig& cfg) {
  Scenario s;
  s.cfg = cfg;
  s.params = cfg.potential == "free" ? PhysicalParams::free(cfg.mass, cfg.hbar)
                                     : PhysicalParams::oscillator(cfg.mass, cfg.hbar, cfg.omega);
  s.grid = std::make_shared<const Grid>(cfg.chart == "polar" ? Grid::polar(cfg.n_r, cfg.n_theta, cfg.r_max)
                                                              : Grid::cartesian(cfg.n_x, cfg.n_y, cfg.half_x, cfg.half_y));
  if (cfg.state == StateKind::eigenstate) {
    s.spec = solve_radial(s.params, cfg.alpha, RadialMesh{cfg.n_r, cfg.r_max}, cfg.radial_nodes);
    s.state = eigenstate_density(*s.spec, s.grid);
    s.fields = stationary_fields(*s.spec, cfg.alpha, s.grid, s.params);
    for (std::size_t i = 0; i < s.grid->n0(); ++i)
      for (std::size_t j = 0; j < s.grid->n1(); ++j) s.state.phase(i, j) = cfg.alpha * s.grid->axis1().nodes[j];
    if (is_integer(cfg.alpha)) {
      const int n = static_cast<int>(std::lround(cfg.alpha));
      s.state.winding = n;
      s.psi = eigenstate_psi(*s.spec, *s.grid, n);
    }
  } else {
    GaussianPacket p;
    p.x0 = cfg.x0;
    p.y0 = cfg.y0;
    p.sigma_x = cfg.sigma_x;
    p.sigma_y = cfg.sigma_y;
    p.kx = cfg.kx;
    p.ky = cfg.ky;
    p.chirp = cfg.chirp;
    s.psi = sample_wave(*s.grid, gaussian_packet(p));
    s.state = decompose(s.psi, s.grid).state;
    s.fields = velocity_fields(s.state, s.params);
  }
  return s;
}

void require_quantized(const Scenario& s) {
  if (s.cfg.state == StateKind::eigenstate && !is_integer(s.cfg.alpha))
    throw QuantizationViolation("alpha = " + format_number(s.cfg.alpha) +
                                " is not an integer; exp(i alpha theta) is not single-valued");
}

void require_polar(const Scenario& s, const char* command) {
  if (!s.grid->chart().is_polar()) throw InvalidInput(std::string(command) + " needs grid.chart = polar");
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot write '" + path.string() + "'");
  body(f);
  if (!f) throw InvalidInput("failed writing '" + path.string() + "'");
}

void write_report(const fs::path& dir, const std::string& name, const Json& doc, ReportFormat format) {
  if (format == ReportFormat::json) {
    write_file(dir / (name + ".json"), [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
    return;
  }
  write_file(dir / (name + ".csv"), [&](std::ostream& o) {
    o << "key,value\n";
    const auto flat = doc.flatten();
    for (const auto& [pointer, value] : flat.items()) {
      std::string key = pointer.substr(1);
      for (auto& c : key)
        if (c == '/') c = '.';
      o << key << ',' << (value.is_number_float() ? format_number(value.get<double>())
                          : value.is_string()     ? value.get<std::string>()
                                                  : value.dump())
        << '\n';
    }
  });
}

Json grid_json(const ScenarioConfig& c) {
  if (c.chart == "polar") return {{"chart", "polar"}, {"n_r", c.n_r}, {"n_theta", c.n_theta}, {"r_max", c.r_max}};
  return {{"chart", "cartesian"}, {"n_x", c.n_x}, {"n_y", c.n_y}, {"half_x", c.half_x}, {"half_y", c.half_y}};
}

// --- eigenstate -----------------------------------------------------------------

int cmd_eigenstate(const Scenario& s, const fs::path& dir, std::ostream& out, std::ostream& err) {
  require_polar(s, "eigenstate");
  if (!s.spec) throw InvalidInput("eigenstate needs state.kind = eigenstate");
  const EigenstateSpec& spec = *s.spec;
  const WindingResult w = winding_number(s.fields, *s.grid, s.params, s.cfg.loop_radius);
  const StationaryResidual res = stationary_residual(spec, s.cfg.alpha, s.params, s.grid);

  Json doc;
  doc["command"] = "eigenstate";
  doc["grid"] = grid_json(s.cfg);
  doc["alpha"] = spec.alpha;
  doc["n_r"] = spec.n_r;
  doc["epsilon"] = spec.epsilon;
  if (s.cfg.potential == "oscillator") {
    const double exact = oscillator_level(spec.n_r, spec.alpha, s.cfg.hbar, s.cfg.omega);
    doc["oscillator_level"] = exact;
    doc["relative_error"] = std::abs(spec.epsilon - exact) / exact;
  }
  doc["winding"] = {{"raw", w.raw}, {"nearest", w.winding}, {"quantized", w.quantized},
                    {"loop_radius", s.cfg.loop_radius}};
  doc["stationary_residual"] = {{"radial", res.radial}, {"angular", res.angular}};

  write_file(dir / "eigenstate.csv", [&](std::ostream& o) { write_eigenstate_csv(o, spec); });
  write_file(dir / "field.csv", [&](std::ostream& o) { write_field_csv(o, s.state, s.fields.v); });
  write_report(dir, "eigenstate", doc, s.cfg.format);

  out << "epsilon " << format_number(spec.epsilon) << " winding " << format_number(w.raw) << '\n';
  if (!w.quantized) {
    err << "quantization violation: loop integral gives winding " << format_number(w.raw)
        << ", not an integer\n";
    return kExitViolation;
  }
  return kExitOk;
}

// --- uncertainty ----------------------------------------------------------------

bool ensemble_violates(const EnsembleReport& e) {
  for (std::size_t k = 0; k < e.value.bounds.size(); ++k)
    if (e.value.bounds[k].margin < -kEnsembleSigmas * e.standard_error.bounds[k].margin) return true;
  return false;
}

int cmd_uncertainty(const Scenario& s, const fs::path& dir, std::ostream& out, std::ostream& err) {
  require_quantized(s);
  const UncertaintyReport grid = uncertainty_report(s.state, s.fields, s.params);
  std::optional<EnsembleReport> ens;
  if (s.cfg.particles > 0) {
    require_polar(s, "an ensemble report");
    const Ensemble e = sample_ensemble(s.state, s.cfg.particles, s.cfg.seed, Exec::parallel);
    ens = ensemble_report(s.state, s.fields, s.params, e);
  }

  Json doc;
  doc["command"] = "uncertainty";
  doc["grid"] = grid_json(s.cfg);
  doc["report"] = to_json(grid);
  if (ens) doc["ensemble"] = to_json(*ens);
  write_file(dir / "uncertainty.json", [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
  write_file(dir / "uncertainty.csv",
             [&](std::ostream& o) { write_uncertainty_csv(o, grid, ens ? &*ens : nullptr); });

  out << "min margin " << format_number(grid.min_margin()) << '\n';
  bool violated = false;
  if (grid.min_margin() < -kGridMarginTolerance) {
    err << "inequality violation on the grid: margin " << format_number(grid.min_margin()) << '\n';
    violated = true;
  }
  if (ens && ensemble_violates(*ens)) {
    err << "inequality violation in the ensemble beyond " << kEnsembleSigmas << " standard errors\n";
    violated = true;
  }
  return violated ? kExitViolation : kExitOk;
}

// --- simulate -------------------------------------------------------------------

Json simulate_direction(const Scenario& s, Direction direction, std::uint64_t seed, const Grid& cells,
                        const fs::path& dir) {
  const ScenarioConfig& c = s.cfg;
  const bool stationary = c.state == StateKind::eigenstate;
  const std::string tag = direction == Direction::forward ? "forward" : "backward";

  const Field initial_ref = cell_masses(cells, interpolated_density(s.state));
  Ensemble e = sample_ensemble(s.state, c.particles, seed, Exec::parallel);
  const double l1_initial = histogram_l1(estimate_density(e, cells, Exec::parallel), cells, initial_ref);

  DriftAccumulator acc(cells, c.particles, c.mass);
  std::uint64_t reflections = 0;
  Field final_ref = initial_ref;
  double elapsed = 0.0;
  if (stationary) {
    EnsembleRun run{std::move(e), 0.0, 0, 0, RunConfig{c.dt, c.steps, c.particles, seed, direction}};
    run_ensemble(run, DriftField::from(*s.grid, s.fields, direction), s.params.nu(), Exec::parallel, &acc);
    e = std::move(run.particles);
    reflections = run.reflections;
    elapsed = run.time;
  } else {
    PolarPropagator prop(s.grid, s.params, c.dt);
    CoupledRun run = run_coupled(std::move(e), s.psi, prop, direction, c.steps, seed, Exec::parallel, &acc);
    e = std::move(run.particles);
    reflections = run.reflections;
    elapsed = run.time;
    final_ref = cell_masses(cells, interpolated_density(decompose(run.psi, s.grid).state));
  }
  const DensityEstimate hist = estimate_density(e, cells, Exec::parallel);
  const double l1_final = histogram_l1(hist, cells, final_ref);
  const DriftEstimate drifts = finalize(acc);

  write_file(dir / ("histogram_" + tag + ".csv"), [&](std::ostream& o) { write_histogram_csv(o, hist, cells, final_ref); });
  write_file(dir / ("drifts_" + tag + ".csv"), [&](std::ostream& o) { write_drift_csv(o, drifts); });
  write_file(dir / ("ensemble_" + tag + ".csv"), [&](std::ostream& o) { write_ensemble_csv(o, e, elapsed); });

  const double steps = static_cast<double>(c.particles) * static_cast<double>(c.steps);
  Json j;
  j["seed"] = seed;
  j["elapsed"] = elapsed;
  j["l1_initial"] = l1_initial;
  j["l1_final"] = l1_final;
  j["overflow"] = hist.overflow;
  j["reflections"] = reflections;
  j["reflection_fraction"] = static_cast<double>(reflections) / steps;
  if (direction == Direction::forward)
    j["ptheta_plus"] = {{"value", drifts.ptheta_plus}, {"standard_error", drifts.ptheta_plus_se}};
  else
    j["ptheta_minus"] = {{"value", drifts.ptheta_minus}, {"standard_error", drifts.ptheta_minus_se}};
  return j;
}

int cmd_simulate(const Scenario& s, const fs::path& dir, std::ostream& out, std::ostream&) {
  require_quantized(s);
  require_polar(s, "simulate");
  if (s.cfg.particles == 0) throw InvalidInput("simulate needs run.particles > 0");
  const Grid cells = Grid::polar(s.cfg.hist_n_r, s.cfg.hist_n_theta, s.cfg.hist_r_max);

  Json doc;
  doc["command"] = "simulate";
  doc["grid"] = grid_json(s.cfg);
  doc["particles"] = s.cfg.particles;
  doc["dt"] = s.cfg.dt;
  doc["steps"] = s.cfg.steps;
  doc["stationary_fields"] = s.cfg.state == StateKind::eigenstate;
  if (s.cfg.state == StateKind::eigenstate) doc["expected_ptheta"] = s.cfg.hbar * s.cfg.alpha;
  if (s.cfg.direction != RunDirection::backward) {
    doc["forward"] = simulate_direction(s, Direction::forward, s.cfg.seed, cells, dir);
    out << "forward L1 " << format_number(doc["forward"]["l1_final"].get<double>()) << '\n';
  }
  if (s.cfg.direction != RunDirection::forward) {
    // independent of the forward run's noise and initial draw
    doc["backward"] = simulate_direction(s, Direction::backward, splitmix64(s.cfg.seed), cells, dir);
    out << "backward L1 " << format_number(doc["backward"]["l1_final"].get<double>()) << '\n';
  }
  write_report(dir, "simulate", doc, s.cfg.format);
  return kExitOk;
}

// --- evolve ---------------------------------------------------------------------

int cmd_evolve(const Scenario& s, const fs::path& dir, std::ostream& out, std::ostream& err) {
  require_quantized(s);
  require_polar(s, "evolve");
  const PolarPropagator prop(s.grid, s.params, s.cfg.evolve_dt);
  const EvolutionConfig ecfg{s.cfg.evolve_dt, s.cfg.horizon, s.cfg.audit_every, true};
  const EvolutionResult res = evolve(s.psi, prop, ecfg);

  double min_margin = std::numeric_limits<double>::infinity(), max_continuity = 0.0, max_radial = 0.0, max_angular = 0.0;
  std::size_t skipped = 0;
  for (const auto& a : res.audits) {
    min_margin = std::min(min_margin, a.min_margin);
    max_continuity = std::max(max_continuity, a.continuity);
    if (a.hydro.skipped) {
      ++skipped;
      continue;
    }
    max_radial = std::max(max_radial, a.hydro.radial);
    max_angular = std::max(max_angular, a.hydro.angular);
  }
  Json doc;
  doc["command"] = "evolve";
  doc["grid"] = grid_json(s.cfg);
  doc["dt"] = s.cfg.evolve_dt;
  doc["time"] = res.time;
  doc["audits"] = res.audits.size();
  doc["max_norm_drift"] = res.max_norm_drift;
  doc["max_energy_drift"] = res.max_energy_drift;
  doc["max_continuity"] = max_continuity;
  doc["max_hydro_radial"] = max_radial;
  doc["max_hydro_angular"] = max_angular;
  doc["hydro_skipped"] = skipped;
  doc["min_margin"] = res.audits.empty() ? Json(nullptr) : Json(min_margin);
  write_file(dir / "audits.csv", [&](std::ostream& o) { write_audit_csv(o, res.audits); });
  write_report(dir, "evolve", doc, s.cfg.format);

  out << "audits " << res.audits.size() << " min margin " << format_number(min_margin) << '\n';
  if (min_margin < -kGridMarginTolerance) {
    err << "inequality violation during evolution: margin " << format_number(min_margin) << '\n';
    return kExitViolation;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic quantum hydrodynamics in polar coordinates"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> particles;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Scenario file (key = value text, or .json)");
    sub->add_option("--seed", seed, "Master seed override");
    sub->add_option("--out", out_dir, "Output directory override");
    sub->add_option("--format", format, "Report format override")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--particles", particles, "Particle count override");
  };
  using Command = std::function<int(const Scenario&, const fs::path&, std::ostream&, std::ostream&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"eigenstate", "Solve the radial problem, check quantisation and the stationary residual", cmd_eigenstate},
      {"uncertainty", "Evaluate the uncertainty bounds on the grid (and an ensemble)", cmd_uncertainty},
      {"simulate", "Run forward and/or backward particle ensembles", cmd_simulate},
      {"evolve", "Propagate the wave function and audit the hydrodynamic equations", cmd_evolve},
  };
  for (const auto& [name, help, unused] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    ScenarioConfig cfg = config_path.empty() ? ScenarioConfig{} : load_config(config_path);
    std::map<std::string, std::string> overrides;
    if (seed) overrides["run.seed"] = std::to_string(*seed);
    if (particles) overrides["run.particles"] = std::to_string(*particles);
    if (!out_dir.empty()) overrides["output.dir"] = out_dir;
    if (!format.empty()) overrides["output.format"] = format;
    cfg = apply_config(overrides, cfg);

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    for (const auto& [name, help, command] : commands)
      if (app.got_subcommand(name)) return command(build(cfg), dir, out, err);
    return kExitInvalid;
  } catch (const ConfigError& e) {
    err << "configuration error:\n";
    for (const auto& p : e.problems()) err << "  " << p << '\n';
    return kExitInvalid;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const QuantizationViolation& e) {
    err << "quantization violation: " << e.what() << '\n';
    return kExitViolation;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace qhydro
