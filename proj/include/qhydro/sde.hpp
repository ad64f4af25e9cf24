#pragma once

// Forward / backward stochastic processes in polar coordinates and the
// ensemble estimators built on them.
//
// Ensemble kernels come in two flavours with identical results: a serial
// reference and an OpenMP version. Noise is counter-based and reductions use a
// fixed particle-block partition, so outputs are bit-identical for any thread
// count.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "qhydro/geometry.hpp"
#include "qhydro/madelung.hpp"
#include "qhydro/rng.hpp"

namespace qhydro {

enum class Direction { forward, backward };
enum class Exec { serial, parallel };

struct Particle {
  double r = 1.0;
  double theta = 0.0;  // unwrapped

  int winding() const;
  double wrapped() const;  // in [0, 2pi)
};

struct DriftSample {
  double ur = 0.0;      // u^r
  double utheta = 0.0;  // u^theta (contravariant)
};

struct StepResult {
  Particle particle;
  bool reflected = false;
};

/// Euler-Maruyama step of the forward process (dt > 0). The Cartesian noise
/// pair is rotated into the (r, theta) frame at the pre-step angle.
StepResult forward_step(Particle p, DriftSample u_plus, double nu, double dt, std::pair<double, double> noise);

/// Step of the backward process with dt < 0:
/// dr = u^r_- dt - (nu / r) dt + sqrt(2 nu |dt|) xi^r.
StepResult backward_step(Particle p, DriftSample u_minus, double nu, double dt, std::pair<double, double> noise);

/// Bilinear interpolation table for one drift field. Stores r u^r and
/// r^2 u^theta, which stay smooth at the origin for the fields of interest.
class DriftField {
 public:
  DriftField() = default;
  DriftField(const Grid& grid, const PairField& drift);
  static DriftField zero();
  static DriftField from(const Grid& grid, const VelocityFields& fields, Direction direction);

  DriftSample sample(double r, double theta_wrapped) const;

 private:
  std::vector<double> r_nodes_;
  std::size_t n_theta_ = 0;
  double h_theta_ = 0.0;
  std::vector<double> scaled_r_;
  std::vector<double> scaled_theta_;
};

/// Structure-of-arrays particle population.
struct Ensemble {
  std::vector<double> r;
  std::vector<double> theta;

  std::size_t size() const { return r.size(); }
  Particle particle(std::size_t k) const { return {r[k], theta[k]}; }
};

inline constexpr std::size_t kParticleBlock = 2048;

/// Per-cell conditional averages of forward and backward increments.
class DriftAccumulator {
 public:
  /// `cells` is a polar grid whose nodes are cell centres; `blocks` must cover
  /// the ensemble in kParticleBlock chunks.
  DriftAccumulator(const Grid& cells, std::size_t particles, double mass);

  /// Records one increment of particle k from `before` to `after` over |dt|.
  void record(std::size_t k, Particle before, Particle after, double nu, double dt);

  std::size_t blocks() const { return blocks_.size(); }
  const Grid& cells() const { return cells_; }

  struct Cell {
    std::uint64_t count_plus = 0;
    std::uint64_t count_minus = 0;
    double ur_plus = 0.0, ur_plus_sq = 0.0, ut_plus = 0.0, ut_plus_sq = 0.0;
    double ur_minus = 0.0, ur_minus_sq = 0.0, ut_minus = 0.0, ut_minus_sq = 0.0;
  };
  struct Pooled {
    std::uint64_t count = 0;
    double ptheta_plus = 0.0;   // sum of m r_pre^2 dtheta / dt
    double ptheta_minus = 0.0;  // sum of m r_post^2 dtheta / dt
  };

  /// Merged cells in fixed block order.
  std::vector<Cell> merged() const;
  const std::vector<Pooled>& pooled() const { return pooled_; }

 private:
  Grid cells_;
  double mass_;
  std::vector<std::vector<Cell>> blocks_;
  std::vector<Pooled> pooled_;
};

struct DriftEstimate {
  Grid cells;
  PairField u_plus;
  PairField u_minus;
  PairField se_plus;   // standard errors of the cell means
  PairField se_minus;
  NodeMask estimated;  // 1 where both directions have >= min_visits samples
  /// Pooled covariant angular momentum m g_thetatheta u^theta_pm and the
  /// batch-means standard errors over particle blocks.
  double ptheta_plus = 0.0, ptheta_plus_se = 0.0;
  double ptheta_minus = 0.0, ptheta_minus_se = 0.0;
};

DriftEstimate finalize(const DriftAccumulator& acc, std::uint64_t min_visits = 30);

struct RunConfig {
  double dt = 1e-3;
  std::uint64_t steps = 1000;
  std::size_t particles = 100000;
  std::uint64_t seed = 1;
  Direction direction = Direction::forward;
};

struct EnsembleRun {
  Ensemble particles;
  double time = 0.0;
  std::uint64_t steps_taken = 0;
  std::uint64_t reflections = 0;
  RunConfig config;
};

/// Draws particles i.i.d. from the state's density (cell by mass, then
/// area-uniform inside the cell).
Ensemble sample_ensemble(const MadelungState& state, std::size_t count, std::uint64_t seed, Exec exec);

/// One synchronous step of every particle. Returns the number of reflections.
std::uint64_t step_ensemble(Ensemble& ensemble, const DriftField& drift, double nu, double dt, Direction direction,
                            std::uint64_t seed, std::uint64_t step, Exec exec, DriftAccumulator* acc = nullptr);

/// Advances run.config.steps steps with a fixed drift field.
void run_ensemble(EnsembleRun& run, const DriftField& drift, double nu, Exec exec, DriftAccumulator* acc = nullptr);

/// Histogram density on `cells` (count / (N * cell volume)); particles beyond
/// the outer edge are reported in `overflow` as a mass fraction.
struct DensityEstimate {
  Field rho;
  double overflow = 0.0;
};
DensityEstimate estimate_density(const Ensemble& ensemble, const Grid& cells, Exec exec);

/// Reference mass of each cell of `cells` for a density function rho(r, theta),
/// integrated with sub x sub midpoint samples per cell.
Field cell_masses(const Grid& cells, const std::function<double(double, double)>& rho, int sub = 8);

/// Density of a grid state at an arbitrary point by bilinear interpolation.
std::function<double(double, double)> interpolated_density(const MadelungState& state);

/// L1 distance between the histogram and reference masses (including mass
/// outside the histogram).
double histogram_l1(const DensityEstimate& estimate, const Grid& cells, const Field& reference_masses);

/// Stored trajectories: snapshots[t][k] is particle k at time t * dt.
struct Trajectories {
  double dt = 0.0;
  double nu = 0.0;
  double mass = 1.0;
  std::vector<std::vector<Particle>> snapshots;
};

/// Conditional forward / backward increment averages per cell with the Ito
/// drift nu / r removed. Throws InvalidInput for fewer than two snapshots.
DriftEstimate estimate_drifts(const Trajectories& trajectories, const Grid& cells, std::uint64_t min_visits = 30);

}  // namespace qhydro
