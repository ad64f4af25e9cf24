#pragma once

// Stochastic momenta, their variance decomposition, and both sides of the
// coordinate-dependent Robertson-Schroedinger inequalities on D = 2 charts.
//
// Angular statistics use the wrapped angle in [0, 2pi) with a fixed cut at 0.
// The boundary term of the general bound is evaluated on that same cut.

#include <array>
#include <cstddef>
#include <vector>

#include "qhydro/geometry.hpp"
#include "qhydro/madelung.hpp"
#include "qhydro/sde.hpp"

namespace qhydro {

/// Covariant momenta p_i^pm = m g_ij u^j_pm.
struct MomentumFields {
  PairField plus;
  PairField minus;
};
MomentumFields momentum_fields(const VelocityFields& fields, const Grid& grid, const PhysicalParams& params);

/// E[p_i] = m int J rho g_ii v^i.
double momentum_mean(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params,
                     int i);

struct CoordinateStats {
  double mean = 0.0;               // E[q^i]
  double variance = 0.0;           // Delta^2_{q^i}
  double momentum_mean = 0.0;      // E[p_i], p = (p+ + p-) / 2
  double variance_plus = 0.0;      // Delta^2_{p_i^+}
  double variance_minus = 0.0;     // Delta^2_{p_i^-}
  double sigma2 = 0.0;             // (Delta^2_+ + Delta^2_-) / 2
  double osmotic_part = 0.0;       // Delta^2_{(p+ - p-)/2}
  double current_part = 0.0;       // Delta^2_{(p+ + p-)/2}
  double decomposition_error = 0.0;  // |sigma2 - parts| / sigma2
};

/// Both sides of the bound for the pair (q^i, p_j).
struct BoundTerms {
  int i = 0;
  int j = 0;
  double position_variance = 0.0;
  double momentum_sigma2 = 0.0;
  double lhs = 0.0;
  double delta = 0.0;
  /// Boundary values of J rho (q^i - E q^i) integrated over the faces normal
  /// to q^j; the total-derivative integral is upper - lower.
  double boundary_flux_lower = 0.0;
  double boundary_flux_upper = 0.0;
  double christoffel_term = 0.0;  // int J rho (q^i - E q^i) Gamma^k_{jk}
  double kennard_term = 0.0;      // (hbar^2 / 4) |delta - flux + christoffel|^2
  double covariance = 0.0;        // E[dq^i dp_j]
  double covariance_term = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // lhs - rhs
};

struct UncertaintyReport {
  ChartKind chart = ChartKind::polar;
  std::array<CoordinateStats, 2> coords{};
  /// Pairs (0,0), (1,1), (0,1), (1,0).
  std::vector<BoundTerms> bounds;
  /// E[r] E[1/r] on polar charts (>= 1 for any state); 0 on Cartesian charts.
  double r_moment_product = 0.0;

  const BoundTerms& bound(int i, int j) const;
  double min_margin() const;
};

UncertaintyReport uncertainty_report(const MadelungState& state, const VelocityFields& fields,
                                     const PhysicalParams& params);

BoundTerms general_bound(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params,
                         int i, int j);
/// general_bound with i = j = r on a polar state.
BoundTerms radial_bound(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params);
/// general_bound with i = j = theta on a polar state.
BoundTerms angular_bound(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params);

/// The same report estimated from particles, with batch-means standard errors
/// over kParticleBlock-sized blocks. Momenta are interpolated from the grid
/// fields; the boundary term needs rho on the cut and is taken from the grid.
struct EnsembleReport {
  UncertaintyReport value;
  UncertaintyReport standard_error;
  std::size_t particles = 0;
  std::size_t blocks = 0;
  double inverse_r_clip_fraction = 0.0;  // share of particles with r < r_min
};

EnsembleReport ensemble_report(const MadelungState& state, const VelocityFields& fields,
                               const PhysicalParams& params, const Ensemble& ensemble);

}  // namespace qhydro
