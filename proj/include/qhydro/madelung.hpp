#pragma once

// Hydrodynamic (density, velocity potential) representation of a wave function
// and the velocity fields derived from it.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "qhydro/geometry.hpp"

namespace qhydro {

/// Mass, action quantum and radial potential. The diffusivity nu = hbar / 2m is
/// derived, never stored.
class PhysicalParams {
 public:
  using Potential = std::function<double(double)>;

  PhysicalParams() = default;
  PhysicalParams(double mass, double hbar, Potential potential = {});

  /// V(r) = m omega^2 r^2 / 2.
  static PhysicalParams oscillator(double mass = 1.0, double hbar = 1.0, double omega = 1.0);
  static PhysicalParams free(double mass = 1.0, double hbar = 1.0) { return PhysicalParams(mass, hbar); }

  double mass() const { return mass_; }
  double hbar() const { return hbar_; }
  double nu() const { return hbar_ / (2.0 * mass_); }
  double potential(double r) const { return potential_ ? potential_(r) : 0.0; }
  const Potential& potential_function() const { return potential_; }

 private:
  double mass_ = 1.0;
  double hbar_ = 1.0;
  Potential potential_;
};

using NodeMask = std::vector<std::uint8_t>;

/// Density rho and velocity potential Theta on a grid. On polar grids the phase
/// obeys Theta(r, theta + 2pi) = Theta(r, theta) + 2pi * winding.
struct MadelungState {
  std::shared_ptr<const Grid> grid;
  Field rho;
  Field phase;
  int winding = 0;
  /// Nodes with rho below the amplitude floor; excluded from log-derivatives.
  NodeMask flagged;

  const Grid& g() const { return *grid; }
};

inline constexpr double kAmplitudeFloor = 1e-12;

struct Decomposition {
  MadelungState state;
  /// Flat indices of sub-floor nodes that sit between resolved rows, i.e.
  /// genuine wave-function nodes rather than decaying tails.
  std::vector<std::size_t> node_singularities;
  /// Rows whose own loop winding disagrees with the state's winding.
  std::vector<std::size_t> inconsistent_rows;
};

/// Psi -> (rho, Theta). rho is normalised under integrate(); the phase is
/// unwrapped along theta rows, the winding taken by majority vote over rows
/// resolved above the floor, and rows are aligned radially at theta = 0.
Decomposition decompose(const ComplexField& psi, std::shared_ptr<const Grid> grid,
                        double floor = kAmplitudeFloor);

/// (rho, Theta) -> sqrt(rho) exp(i Theta).
ComplexField compose(const MadelungState& state);

/// Normalises rho in place and refreshes the floor mask.
void normalize(MadelungState& state, double floor = kAmplitudeFloor);
NodeMask floor_mask(const Field& rho, double floor = kAmplitudeFloor);

/// Contravariant current velocity v^i = 2 nu g^{ij} d_j Theta.
PairField velocity_from_phase(const MadelungState& state, const PhysicalParams& params);

struct VelocityFields {
  PairField v;        // current velocity (contravariant)
  PairField u_plus;   // forward drift
  PairField u_minus;  // backward drift
  NodeMask flagged;
};

/// u_pm = v pm nu g^{ij} d_j ln rho. Flagged nodes carry no osmotic part.
VelocityFields osmotic_split(const PairField& v, const MadelungState& state, const PhysicalParams& params);

/// Convenience: osmotic_split(velocity_from_phase(state)).
VelocityFields velocity_fields(const MadelungState& state, const PhysicalParams& params);

/// S = (Laplacian sqrt(rho)) / sqrt(rho); zero on flagged nodes.
Field laplacian_ratio(const MadelungState& state);

/// Q = -(hbar^2 / 2m) S.
Field quantum_potential(const MadelungState& state, const PhysicalParams& params);

/// Covariant quantum force 2 nu^2 d_i S; the contravariant form divides the
/// angular component by r^2.
PairField quantum_force(const MadelungState& state, const PhysicalParams& params);

}  // namespace qhydro
