#include "qhydro/evolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include "qhydro/uncertainty.hpp"

namespace qhydro {

using cplx = std::complex<double>;

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

// LU factors of I + i kappa H for one |m|; the off-diagonal of the factor is
// the matrix off-diagonal itself.
struct PolarPropagator::ModeSolver {
  std::vector<cplx> lower;  // multipliers l_i, i >= 1
  std::vector<cplx> pivot;  // w_i
  std::vector<cplx> off;    // i kappa e_i
  std::vector<cplx> diag;   // 1 + i kappa d_i
};

struct PolarPropagator::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

PolarPropagator::PolarPropagator(std::shared_ptr<const Grid> grid, PhysicalParams params, double dt, Exec exec,
                                 double norm_tolerance)
    : grid_(std::move(grid)), params_(std::move(params)), dt_(dt), exec_(exec), norm_tolerance_(norm_tolerance) {
  if (!grid_ || !grid_->chart().is_polar()) throw InvalidInput("the propagator needs a polar grid");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("time step must be positive");
  const Grid& g = *grid_;
  const std::size_t n0 = g.n0(), n1 = g.n1();
  const RadialMesh mesh{n0, g.axis0().upper};
  for (double r : g.axis0().nodes) sqrt_r_.push_back(std::sqrt(r));

  const double kappa = dt / (2.0 * params_.hbar());
  for (std::size_t m = 0; m <= n1 / 2; ++m) {
    Tridiagonal h = radial_operator(params_, static_cast<double>(m), mesh);
    ModeSolver s;
    s.lower.assign(n0, 0.0);
    s.pivot.assign(n0, 0.0);
    s.off.assign(n0 > 0 ? n0 - 1 : 0, 0.0);
    for (std::size_t i = 0; i + 1 < n0; ++i) s.off[i] = cplx(0.0, kappa * h.off[i]);
    s.diag.resize(n0);
    for (std::size_t i = 0; i < n0; ++i) s.diag[i] = cplx(1.0, kappa * h.diag[i]);
    s.pivot[0] = s.diag[0];
    for (std::size_t i = 1; i < n0; ++i) {
      s.lower[i] = s.off[i - 1] / s.pivot[i - 1];
      s.pivot[i] = s.diag[i] - s.lower[i] * s.off[i - 1];
      if (std::abs(s.pivot[i]) < 1e-300) throw NumericalFailure("singular Crank-Nicolson factor");
    }
    operators_.push_back(std::move(h));
    solvers_.push_back(std::move(s));
  }

  plans_ = std::make_unique<Plans>();
  std::vector<cplx> scratch(g.size());
  auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
  const int n = static_cast<int>(n1);
  const int howmany = static_cast<int>(n0);
  const std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->forward = fftw_plan_many_dft(1, &n, howmany, data, nullptr, 1, n, data, nullptr, 1, n, FFTW_FORWARD, flags);
  plans_->backward =
      fftw_plan_many_dft(1, &n, howmany, data, nullptr, 1, n, data, nullptr, 1, n, FFTW_BACKWARD, flags);
  if (!plans_->forward || !plans_->backward) throw NumericalFailure("FFTW planning failed");
}

PolarPropagator::~PolarPropagator() {
  if (!plans_) return;
  const std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

std::size_t PolarPropagator::mode_order(std::size_t q) const {
  const std::size_t n1 = grid_->n1();
  return q <= n1 / 2 ? q : n1 - q;
}

void PolarPropagator::to_modes(const ComplexField& psi, std::vector<cplx>& modes) const {
  modes = psi.values();
  auto* data = reinterpret_cast<fftw_complex*>(modes.data());
  fftw_execute_dft(plans_->forward, data, data);
}

void PolarPropagator::from_modes(std::vector<cplx>& modes, ComplexField& psi) const {
  auto* data = reinterpret_cast<fftw_complex*>(modes.data());
  fftw_execute_dft(plans_->backward, data, data);
  const double scale = 1.0 / static_cast<double>(grid_->n1());
  for (std::size_t k = 0; k < modes.size(); ++k) psi[k] = modes[k] * scale;
}

double PolarPropagator::norm(const ComplexField& psi) const {
  const Grid& g = *grid_;
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n0(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < g.n1(); ++j) row += std::norm(psi(i, j));
    acc += row * g.cell_weight(i);
  }
  return acc;
}

double PolarPropagator::energy(const ComplexField& psi) const {
  const Grid& g = *grid_;
  const std::size_t n0 = g.n0(), n1 = g.n1();
  std::vector<cplx> modes;
  to_modes(psi, modes);
  double acc = 0.0;
  for (std::size_t q = 0; q < n1; ++q) {
    const Tridiagonal& h = operators_[mode_order(q)];
    for (std::size_t i = 0; i < n0; ++i) {
      const cplx phi = sqrt_r_[i] * modes[i * n1 + q];
      cplx hphi = h.diag[i] * phi;
      if (i > 0) hphi += h.off[i - 1] * sqrt_r_[i - 1] * modes[(i - 1) * n1 + q];
      if (i + 1 < n0) hphi += h.off[i] * sqrt_r_[i + 1] * modes[(i + 1) * n1 + q];
      acc += std::real(std::conj(phi) * hphi);
    }
  }
  const double nd = static_cast<double>(n1);
  return kTwoPi * g.h0() * acc / (nd * nd);
}

void PolarPropagator::step(ComplexField& psi) const {
  const Grid& g = *grid_;
  check_shape(g, Field(psi.n0(), psi.n1()), "PolarPropagator::step");
  const std::size_t n0 = g.n0(), n1 = g.n1();
  const double before = norm(psi);
  std::vector<cplx> modes;
  to_modes(psi, modes);

  auto advance = [&](std::size_t q) {
    const ModeSolver& s = solvers_[mode_order(q)];
    std::vector<cplx> phi(n0), rhs(n0);
    for (std::size_t i = 0; i < n0; ++i) phi[i] = sqrt_r_[i] * modes[i * n1 + q];
    // rhs = (I - i kappa H) phi = 2 phi - (I + i kappa H) phi
    for (std::size_t i = 0; i < n0; ++i) {
      cplx a = s.diag[i] * phi[i];
      if (i > 0) a += s.off[i - 1] * phi[i - 1];
      if (i + 1 < n0) a += s.off[i] * phi[i + 1];
      rhs[i] = 2.0 * phi[i] - a;
    }
    for (std::size_t i = 1; i < n0; ++i) rhs[i] -= s.lower[i] * rhs[i - 1];
    phi[n0 - 1] = rhs[n0 - 1] / s.pivot[n0 - 1];
    for (std::size_t i = n0 - 1; i-- > 0;) phi[i] = (rhs[i] - s.off[i] * phi[i + 1]) / s.pivot[i];
    for (std::size_t i = 0; i < n0; ++i) modes[i * n1 + q] = phi[i] / sqrt_r_[i];
  };
  const auto nq = static_cast<std::int64_t>(n1);
  if (exec_ == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t q = 0; q < nq; ++q) advance(static_cast<std::size_t>(q));
  } else {
    for (std::int64_t q = 0; q < nq; ++q) advance(static_cast<std::size_t>(q));
  }

  ComplexField next(psi.n0(), psi.n1());
  from_modes(modes, next);
  const double after = norm(next);
  if (!std::isfinite(after) || std::abs(after - before) > norm_tolerance_ * std::max(before, 1e-300)) {
    throw NumericalFailure("Crank-Nicolson step rejected: norm changed from " + std::to_string(before) + " to " +
                           std::to_string(after));
  }
  psi = std::move(next);
}

// --- Audits --------------------------------------------------------------------------

double continuity_residual(const MadelungState& before, const MadelungState& after, double interval,
                           const MadelungState& mid, const VelocityFields& fields) {
  if (!(interval > 0.0)) throw InvalidInput("snapshot interval must be positive");
  const Grid& g = mid.g();
  check_shape(g, before.rho, "continuity_residual");
  check_shape(g, after.rho, "continuity_residual");
  PairField flux{fields.v.c0, fields.v.c1};
  for (std::size_t k = 0; k < g.size(); ++k) {
    flux.c0[k] *= mid.rho[k];
    flux.c1[k] *= mid.rho[k];
  }
  const Field div = divergence(g, flux);
  Field sq = g.make_field();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double r = (after.rho[k] - before.rho[k]) / interval + div[k];
    sq[k] = r * r;
  }
  return std::sqrt(integrate(g, sq));
}

HydroResidual hydro_residual(const ComplexField& before, const ComplexField& mid, const ComplexField& after,
                             double dt, std::shared_ptr<const Grid> grid, const PhysicalParams& params,
                             std::optional<double> nu) {
  if (!(dt > 0.0)) throw InvalidInput("snapshot spacing must be positive");
  const Grid& g = *grid;
  if (!g.chart().is_polar()) throw InvalidInput("hydro_residual needs a polar grid");
  const Decomposition dec = decompose(mid, grid);
  const MadelungState& s = dec.state;
  HydroResidual out;
  out.singular_fraction = static_cast<double>(dec.node_singularities.size()) / static_cast<double>(g.size());
  if (out.singular_fraction > 0.05) {
    out.skipped = true;
    return out;
  }
  const double m = params.mass(), hbar = params.hbar();
  const double nu_q = nu.value_or(params.nu());
  const PairField v = velocity_from_phase(s, params);
  const Field lap = laplacian_ratio(s);

  Field b = g.make_field();
  for (std::size_t i = 0; i < g.n0(); ++i) {
    const double r = g.axis0().nodes[i];
    const double vpot = params.potential(r);
    for (std::size_t j = 0; j < g.n1(); ++j) {
      const std::size_t k = i * g.n1() + j;
      if (s.flagged[k]) continue;
      const double dtheta = std::arg(after[k] * std::conj(before[k])) / (2.0 * dt);
      const double kinetic = 0.5 * m * (v.c0[k] * v.c0[k] + r * r * v.c1[k] * v.c1[k]);
      const double q = -2.0 * m * nu_q * nu_q * lap[k];
      b[k] = hbar * dtheta + kinetic + vpot + q;
    }
  }
  const Field db = diff1(g, b);
  Field rsq = g.make_field(), asq = g.make_field();
  for (std::size_t i = 0; i < g.n0(); ++i) {
    const double r = g.axis0().nodes[i];
    for (std::size_t j = 0; j < g.n1(); ++j) {
      const std::size_t k = i * g.n1() + j;
      if (s.flagged[k]) continue;
      rsq[k] = s.rho[k] * b[k] * b[k];
      const double ang = db[k] / r;
      asq[k] = s.rho[k] * ang * ang;
    }
  }
  out.radial = std::sqrt(integrate(g, rsq));
  out.angular = std::sqrt(integrate(g, asq));
  return out;
}

EvolutionResult evolve(ComplexField psi, const PolarPropagator& prop, const EvolutionConfig& cfg,
                       const std::function<void(double, const ComplexField&)>& observer) {
  if (!(cfg.horizon > 0.0)) throw InvalidInput("evolution horizon must be positive");
  if (std::abs(cfg.dt - prop.dt()) > 1e-15 * prop.dt()) throw InvalidInput("config dt differs from the propagator");
  if (cfg.audit_every == 0) throw InvalidInput("audit cadence must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  const double dt = prop.dt();
  auto grid = prop.grid_ptr();
  const PhysicalParams& params = prop.params();

  EvolutionResult res;
  const double norm0 = prop.norm(psi);
  const double energy0 = prop.energy(psi) / norm0;
  ComplexField prev;
  for (std::size_t s = 0; s < steps; ++s) {
    const bool audit_next = (s + 1) % cfg.audit_every == 0 && s + 1 < steps;
    const bool audit_now = s > 0 && s % cfg.audit_every == 0;
    ComplexField current = psi;
    prop.step(psi);
    const double t = static_cast<double>(s + 1) * dt;
    if (observer) observer(t, psi);
    const double nrm = prop.norm(psi);
    res.max_norm_drift = std::max(res.max_norm_drift, std::abs(nrm - norm0));
    if (audit_now) {
      AuditRecord rec;
      rec.time = static_cast<double>(s) * dt;
      rec.norm = prop.norm(current);
      rec.energy = prop.energy(current) / rec.norm;
      const MadelungState before = decompose(prev, grid).state;
      const MadelungState after = decompose(psi, grid).state;
      const MadelungState mid = decompose(current, grid).state;
      const VelocityFields fields = velocity_fields(mid, params);
      rec.continuity = continuity_residual(before, after, 2.0 * dt, mid, fields);
      rec.hydro = hydro_residual(prev, current, psi, dt, grid, params);
      if (cfg.uncertainty) {
        const UncertaintyReport rep = uncertainty_report(mid, fields, params);
        rec.radial_margin = rep.bound(0, 0).margin;
        rec.angular_margin = rep.bound(1, 1).margin;
        rec.min_margin = rep.min_margin();
      }
      res.max_energy_drift = std::max(res.max_energy_drift, std::abs(rec.energy - energy0) / std::max(std::abs(energy0), 1e-300));
      res.audits.push_back(rec);
    }
    if (audit_next) prev = std::move(current);
  }
  res.max_energy_drift =
      std::max(res.max_energy_drift, std::abs(prop.energy(psi) / prop.norm(psi) - energy0) / std::max(std::abs(energy0), 1e-300));
  res.time = static_cast<double>(steps) * dt;
  res.psi = std::move(psi);
  return res;
}

CoupledRun run_coupled(Ensemble particles, ComplexField psi, const PolarPropagator& prop, Direction direction,
                       std::uint64_t steps, std::uint64_t seed, Exec exec, DriftAccumulator* acc) {
  auto grid = prop.grid_ptr();
  const PhysicalParams& params = prop.params();
  const double dt = prop.dt();
  CoupledRun run;
  for (std::uint64_t s = 0; s < steps; ++s) {
    const MadelungState state = decompose(psi, grid).state;
    const DriftField drift = DriftField::from(*grid, velocity_fields(state, params), direction);
    run.reflections += step_ensemble(particles, drift, params.nu(), dt, direction, seed, s, exec, acc);
    if (direction == Direction::forward) {
      prop.step(psi);
    } else {
      for (auto& z : psi.values()) z = std::conj(z);
      prop.step(psi);
      for (auto& z : psi.values()) z = std::conj(z);
    }
    run.time += direction == Direction::forward ? dt : -dt;
  }
  run.particles = std::move(particles);
  run.psi = std::move(psi);
  return run;
}

}  // namespace qhydro
