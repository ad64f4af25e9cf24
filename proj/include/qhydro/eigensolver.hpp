#pragma once

// Stationary states with v_r = 0 and v_theta = hbar alpha / m: the radial
// eigenproblem, the loop-integral quantisation check and residual audits.

#include <cstddef>
#include <vector>

#include "qhydro/geometry.hpp"
#include "qhydro/madelung.hpp"

namespace qhydro {

/// Cell-centred radial nodes r_i = (i + 1/2) h, h = r_max / n. Matches axis 0
/// of Grid::polar(n, *, r_max).
struct RadialMesh {
  std::size_t n = 0;
  double r_max = 0.0;

  double h() const { return r_max / static_cast<double>(n); }
  double node(std::size_t i) const { return (static_cast<double>(i) + 0.5) * h(); }
  std::vector<double> nodes() const;
};

struct EigenstateSpec {
  double alpha = 0.0;
  int n_r = 0;
  double epsilon = 0.0;
  RadialMesh mesh;
  /// Signed sqrt(rho) on the mesh nodes, with 2pi int r R^2 dr = 1.
  std::vector<double> radial_profile;
};

/// Symmetric tridiagonal matrix (diag, off) of the radial operator for
/// phi = sqrt(r) R: -(hbar^2 / 2m) [(1/r) d_r r d_r - alpha^2 / r^2] + V(r).
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // size n - 1
};
Tridiagonal radial_operator(const PhysicalParams& params, double alpha, const RadialMesh& mesh);

/// Number of eigenvalues of t strictly below x (Sturm sequence count).
std::size_t sturm_count(const Tridiagonal& t, double x);

/// k-th smallest eigenvalue (k = 0, 1, ...) by bisection.
double tridiagonal_eigenvalue(const Tridiagonal& t, std::size_t k);

/// Eigenvector for an isolated eigenvalue by inverse iteration (unit 2-norm).
std::vector<double> tridiagonal_eigenvector(const Tridiagonal& t, double eigenvalue);

/// (n_r + 1)-th eigenpair of the radial equation. Throws NumericalFailure when
/// the profile's tail exceeds 1e-6 of its peak at r_max or the node count is off.
EigenstateSpec solve_radial(const PhysicalParams& params, double alpha, const RadialMesh& mesh, int n_r);

/// H R - epsilon R at every mesh node, using the solver's discretisation.
std::vector<double> radial_equation_residual(const EigenstateSpec& spec, const PhysicalParams& params);

/// Density R(r)^2, uniform in theta, on a polar grid sharing the spec's mesh.
MadelungState eigenstate_density(const EigenstateSpec& spec, std::shared_ptr<const Grid> grid);

/// psi = R(r) exp(i N theta).
ComplexField eigenstate_psi(const EigenstateSpec& spec, const Grid& grid, int winding);

/// v_r = 0, v_theta = hbar alpha / m (covariant) with the osmotic split of R^2.
/// alpha need not be an integer.
VelocityFields stationary_fields(const EigenstateSpec& spec, double alpha, std::shared_ptr<const Grid> grid,
                                 const PhysicalParams& params);

struct WindingResult {
  int winding = 0;
  double raw = 0.0;
  bool quantized = true;  // |raw - winding| <= 0.1
};

/// (m / 2 pi hbar) * loop integral of v_theta at radius r_loop.
WindingResult winding_number(const VelocityFields& fields, const Grid& grid, const PhysicalParams& params,
                             double r_loop);

struct StationaryResidual {
  /// rho-weighted L2 norm of hbar^2 alpha^2 / (2 m r^2) + V + Q - epsilon, the
  /// integrated radial line (Bernoulli form); sensitive to epsilon.
  double radial = 0.0;
  /// rho-weighted L2 norm of r times the angular line.
  double angular = 0.0;
  Field bernoulli;  // pointwise integrated radial residual
};

StationaryResidual stationary_residual(const EigenstateSpec& spec, double alpha, const PhysicalParams& params,
                                       std::shared_ptr<const Grid> grid);

/// Closed-form 2D oscillator level hbar omega (2 n_r + |alpha| + 1).
inline double oscillator_level(int n_r, double alpha, double hbar = 1.0, double omega = 1.0) {
  return hbar * omega * (2.0 * n_r + (alpha < 0 ? -alpha : alpha) + 1.0);
}

}  // namespace qhydro
