#pragma once

// Time-dependent Schroedinger propagation on polar grids and the audits that
// compare it with the hydrodynamic picture.
//
// Angular modes are exact: psi is Fourier transformed along theta and every
// mode m evolves under the radial operator with alpha = m, using the same
// discretisation as the eigensolver. Each radial problem is stepped by
// Crank-Nicolson, which is unitary.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "qhydro/eigensolver.hpp"
#include "qhydro/geometry.hpp"
#include "qhydro/madelung.hpp"
#include "qhydro/sde.hpp"

namespace qhydro {

class PolarPropagator {
 public:
  PolarPropagator(std::shared_ptr<const Grid> grid, PhysicalParams params, double dt,
                  Exec exec = Exec::parallel, double norm_tolerance = 1e-9);
  ~PolarPropagator();
  PolarPropagator(const PolarPropagator&) = delete;
  PolarPropagator& operator=(const PolarPropagator&) = delete;

  /// One Crank-Nicolson step. If the norm changes by more than the tolerance
  /// the step is rejected: psi is left untouched and NumericalFailure is thrown.
  void step(ComplexField& psi) const;

  double norm(const ComplexField& psi) const;
  /// <psi|H|psi> with the discrete Hamiltonian (not divided by the norm).
  double energy(const ComplexField& psi) const;

  double dt() const { return dt_; }
  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const PhysicalParams& params() const { return params_; }

 private:
  struct ModeSolver;
  struct Plans;

  void to_modes(const ComplexField& psi, std::vector<std::complex<double>>& modes) const;
  void from_modes(std::vector<std::complex<double>>& modes, ComplexField& psi) const;
  std::size_t mode_order(std::size_t q) const;

  std::shared_ptr<const Grid> grid_;
  PhysicalParams params_;
  double dt_;
  Exec exec_;
  double norm_tolerance_;
  std::vector<double> sqrt_r_;
  std::vector<Tridiagonal> operators_;  // indexed by |m|
  std::vector<ModeSolver> solvers_;     // indexed by |m|
  std::unique_ptr<Plans> plans_;
};

/// L2 norm sqrt(int J R^2) of R = d_t rho + div(rho v), with d_t rho taken from
/// snapshots `interval` apart around `mid` and v from `fields` at `mid`.
double continuity_residual(const MadelungState& before, const MadelungState& after, double interval,
                           const MadelungState& mid, const VelocityFields& fields);

struct HydroResidual {
  /// rho-weighted L2 norm of B = hbar d_t Theta + m |v|^2 / 2 + V + Q, the
  /// integrated radial line; its radial derivative is the differentiated line.
  double radial = 0.0;
  /// rho-weighted L2 norm of (1/r) d_theta B, the physical angular line.
  double angular = 0.0;
  bool skipped = false;
  double singular_fraction = 0.0;  // interior node share that triggers a skip
};

/// Hydrodynamic audit at the middle of three snapshots dt apart. `nu` replaces
/// hbar / 2m in the quantum potential only, which lets tests probe the
/// scaling of the quantum force.
HydroResidual hydro_residual(const ComplexField& before, const ComplexField& mid, const ComplexField& after,
                             double dt, std::shared_ptr<const Grid> grid, const PhysicalParams& params,
                             std::optional<double> nu = std::nullopt);

struct EvolutionConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t audit_every = 100;  // steps between audits
  bool uncertainty = true;        // evaluate the inequality suite at audits
};

struct AuditRecord {
  double time = 0.0;
  double norm = 0.0;
  double energy = 0.0;
  double continuity = 0.0;
  HydroResidual hydro;
  double radial_margin = 0.0;
  double angular_margin = 0.0;
  double min_margin = 0.0;
};

struct EvolutionResult {
  ComplexField psi;  // final state
  double time = 0.0;
  std::vector<AuditRecord> audits;
  double max_norm_drift = 0.0;
  double max_energy_drift = 0.0;  // relative to the initial energy
};

/// Advances psi over cfg.horizon, auditing every cfg.audit_every steps (audits
/// need both neighbours, so the first is at one cadence and the last strictly
/// before the horizon). `observer` sees (t, psi) after every step.
EvolutionResult evolve(ComplexField psi, const PolarPropagator& propagator, const EvolutionConfig& cfg,
                       const std::function<void(double, const ComplexField&)>& observer = {});

/// Ensemble driven by drifts recomputed from psi before every step, with psi
/// advanced alongside. Backward runs step psi in reverse time (conjugate,
/// propagate, conjugate) and use u_-; the ensemble then moves by -dt per step.
struct CoupledRun {
  Ensemble particles;
  ComplexField psi;  // state at the final time
  double time = 0.0;  // signed elapsed time
  std::uint64_t reflections = 0;
};

CoupledRun run_coupled(Ensemble particles, ComplexField psi, const PolarPropagator& propagator, Direction direction,
                       std::uint64_t steps, std::uint64_t seed, Exec exec, DriftAccumulator* acc = nullptr);

}  // namespace qhydro
