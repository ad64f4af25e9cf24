#pragma once

// Two-dimensional coordinate charts, node grids and the quadrature /
// finite-difference machinery shared by every other module.
//
// Polar grids are cell-centred in r: r_i = (i + 1/2) h for i = 0..n_r-1, so
// the innermost node sits at r_min = h/2 > 0 and the cells tile the full
// disc [0, r_max]. Angles are uniform, theta_j = j * 2pi / n_theta, and
// wrap periodically.

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "qhydro/errors.hpp"

namespace qhydro {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

enum class ChartKind { polar, cartesian };

struct Point2 {
  double q0 = 0.0;  // r or x
  double q1 = 0.0;  // theta or y
};

/// Diagonal 2x2 tensor (every supported chart is orthogonal).
struct Diag2 {
  double d0 = 0.0;
  double d1 = 0.0;
};

class CoordinateChart {
 public:
  static CoordinateChart polar() { return CoordinateChart(ChartKind::polar); }
  static CoordinateChart cartesian() { return CoordinateChart(ChartKind::cartesian); }

  ChartKind kind() const { return kind_; }
  bool is_polar() const { return kind_ == ChartKind::polar; }

  Diag2 metric(Point2 q) const;
  Diag2 inverse_metric(Point2 q) const;
  double jacobian(Point2 q) const;
  /// Contracted connection Gamma^k_{jk} for j = 0, 1.
  std::array<double, 2> christoffel_trace(Point2 q) const;
  std::array<double, 2> to_cartesian(Point2 q) const;

  /// Throws InvalidInput when q lies outside the chart (polar: r <= 0).
  void check_domain(Point2 q) const;

 private:
  explicit CoordinateChart(ChartKind kind) : kind_(kind) {}
  ChartKind kind_;
};

/// Free-function form of CoordinateChart::christoffel_trace.
std::array<double, 2> christoffel_trace(const CoordinateChart& chart, Point2 q);
std::array<double, 2> to_cartesian(Point2 polar_q);

struct Axis {
  std::vector<double> nodes;
  double spacing = 0.0;
  double lower = 0.0;  // cell edge below the first node
  double upper = 0.0;  // cell edge above the last node (or period end)
  bool periodic = false;

  std::size_t size() const { return nodes.size(); }
};

/// Row-major field on an n0 x n1 node grid.
template <class T>
class BasicField {
 public:
  BasicField() = default;
  BasicField(std::size_t n0, std::size_t n1, T fill = T{})
      : n0_(n0), n1_(n1), data_(n0 * n1, fill) {}

  std::size_t n0() const { return n0_; }
  std::size_t n1() const { return n1_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * n1_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * n1_ + j]; }
  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

 private:
  std::size_t n0_ = 0;
  std::size_t n1_ = 0;
  std::vector<T> data_;
};

using Field = BasicField<double>;
using ComplexField = BasicField<std::complex<double>>;

/// Pair of component fields (contravariant or covariant, stated by the user).
struct PairField {
  Field c0;
  Field c1;
};

/// How the first radial node is differentiated on a polar grid.
enum class OriginRule {
  antipodal,  // ghost value at (r_0, theta + pi); field continuous through r = 0
  one_sided,  // second-order one-sided stencil; for multivalued data such as phases
};

class Grid {
 public:
  /// Cell-centred polar grid over the disc of radius r_max. n_theta must be even
  /// so that every angular node has an antipodal partner.
  static Grid polar(std::size_t n_r, std::size_t n_theta, double r_max);
  /// Cell-centred Cartesian box [-half_x, half_x] x [-half_y, half_y].
  static Grid cartesian(std::size_t n_x, std::size_t n_y, double half_x, double half_y);

  const CoordinateChart& chart() const { return chart_; }
  const Axis& axis0() const { return axis0_; }
  const Axis& axis1() const { return axis1_; }
  std::size_t n0() const { return axis0_.size(); }
  std::size_t n1() const { return axis1_.size(); }
  std::size_t size() const { return n0() * n1(); }
  double h0() const { return axis0_.spacing; }
  double h1() const { return axis1_.spacing; }

  Point2 point(std::size_t i, std::size_t j) const { return {axis0_.nodes[i], axis1_.nodes[j]}; }
  double jacobian(std::size_t i) const { return jacobian_[i]; }
  /// Quadrature weight J h0 h1 of node (i, j); depends on i only.
  double cell_weight(std::size_t i) const { return jacobian_[i] * h0() * h1(); }
  /// Index of the node at theta + pi (polar grids only).
  std::size_t antipode(std::size_t j) const { return (j + n1() / 2) % n1(); }

  Field make_field(double fill = 0.0) const { return Field(n0(), n1(), fill); }
  ComplexField make_complex_field() const { return ComplexField(n0(), n1()); }

  /// Angular moment weights: sum_j w_j f(theta_j) equals the exact integral of
  /// theta^k times the trigonometric interpolant of f over [0, 2pi). Polar only.
  const std::vector<double>& theta_moment_weights(int power) const;

 private:
  Grid(CoordinateChart chart, Axis a0, Axis a1);

  CoordinateChart chart_;
  Axis axis0_;
  Axis axis1_;
  std::vector<double> jacobian_;
  std::array<std::vector<double>, 3> theta_weights_;
};

void check_shape(const Grid& grid, const Field& f, const char* what);

// --- Quadrature -----------------------------------------------------------------

/// Integral of J(q) f(q) d^2q: midpoint rule along axis 0, periodic rectangle
/// rule along theta. Throws InvalidInput on non-finite samples.
double integrate(const Grid& grid, const Field& f);

/// Integral of J(q) q1^power f(q) d^2q using exact angular moment weights on
/// polar grids (power 0..2), or the midpoint rule on Cartesian grids.
double integrate_axis1_moment(const Grid& grid, const Field& f, int power);

/// Integral of J(q) q0^power f(q) d^2q.
double integrate_axis0_moment(const Grid& grid, const Field& f, int power);

/// Field whose samples are q0 (or q1) at every node.
Field coordinate_field(const Grid& grid, int axis);

// --- Finite differences -------------------------------------------------------

/// d f / d q0, second order. On polar grids the first node follows `rule`; the
/// outer edge and Cartesian edges use one-sided stencils.
Field diff0(const Grid& grid, const Field& f, OriginRule rule = OriginRule::antipodal);
/// d f / d q1, periodic central differences on polar grids.
Field diff1(const Grid& grid, const Field& f);

/// Gradient of a phase field that may carry 2pi jumps and pi jumps at sign
/// changes of a real amplitude. Uses the doubled phase, so both kinds of
/// discontinuity drop out; requires |dPhase| < pi/2 per two cells.
PairField phase_gradient(const Grid& grid, const Field& phase);

/// Scalar Laplacian. Polar: flux-form (1/r) d_r (r d_r f) with zero flux through
/// the origin and f = 0 beyond r_max, plus the periodic second difference / r^2.
/// Cartesian: five-point stencil with zero Dirichlet ghosts.
Field laplacian(const Grid& grid, const Field& f);

/// Covariant divergence (1/J) d_i (J w^i) of a contravariant vector field.
Field divergence(const Grid& grid, const PairField& w);

}  // namespace qhydro
