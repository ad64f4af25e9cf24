#include "qhydro/geometry.hpp"

#include <cmath>
#include <string>

namespace qhydro {

Diag2 CoordinateChart::metric(Point2 q) const {
  if (kind_ == ChartKind::cartesian) return {1.0, 1.0};
  check_domain(q);
  return {1.0, q.q0 * q.q0};
}

Diag2 CoordinateChart::inverse_metric(Point2 q) const {
  if (kind_ == ChartKind::cartesian) return {1.0, 1.0};
  check_domain(q);
  return {1.0, 1.0 / (q.q0 * q.q0)};
}

double CoordinateChart::jacobian(Point2 q) const {
  if (kind_ == ChartKind::cartesian) return 1.0;
  check_domain(q);
  return q.q0;
}

std::array<double, 2> CoordinateChart::christoffel_trace(Point2 q) const {
  if (kind_ == ChartKind::cartesian) return {0.0, 0.0};
  check_domain(q);
  return {1.0 / q.q0, 0.0};
}

std::array<double, 2> CoordinateChart::to_cartesian(Point2 q) const {
  if (kind_ == ChartKind::cartesian) return {q.q0, q.q1};
  return qhydro::to_cartesian(q);
}

void CoordinateChart::check_domain(Point2 q) const {
  if (kind_ == ChartKind::polar && !(q.q0 > 0.0)) {
    throw InvalidInput("polar chart requires r > 0, got r = " + std::to_string(q.q0));
  }
}

std::array<double, 2> christoffel_trace(const CoordinateChart& chart, Point2 q) {
  return chart.christoffel_trace(q);
}

std::array<double, 2> to_cartesian(Point2 polar_q) {
  return {polar_q.q0 * std::cos(polar_q.q1), polar_q.q0 * std::sin(polar_q.q1)};
}

namespace {

Axis cell_centred_axis(std::size_t n, double lower, double upper) {
  Axis a;
  a.lower = lower;
  a.upper = upper;
  a.spacing = (upper - lower) / static_cast<double>(n);
  a.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.nodes[i] = lower + (static_cast<double>(i) + 0.5) * a.spacing;
  return a;
}

// Weights of the exact theta^k moment of the trigonometric interpolant on n
// equispaced nodes theta_j = j h (n even).
std::vector<double> trig_moment_weights(std::size_t n, int power) {
  const std::size_t half = n / 2;
  const double h = kTwoPi / static_cast<double>(n);
  std::vector<double> w(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double tj = static_cast<double>(j) * h;
    double acc = 0.0;
    if (power == 1) {
      acc = 2.0 * kPi * kPi;
      for (std::size_t m = 1; m < half; ++m) {
        const double md = static_cast<double>(m);
        acc += 2.0 * (-kTwoPi / md) * std::sin(md * tj);
      }
      // Nyquist term integrates to -(2pi/M) sin(M theta_j) = 0 on the nodes.
    } else {
      acc = 8.0 * kPi * kPi * kPi / 3.0;
      for (std::size_t m = 1; m < half; ++m) {
        const double md = static_cast<double>(m);
        acc += 2.0 * (4.0 * kPi * std::cos(md * tj) / (md * md) - 4.0 * kPi * kPi * std::sin(md * tj) / md);
      }
      const double M = static_cast<double>(half);
      acc += 4.0 * kPi * std::cos(M * tj) / (M * M);
    }
    w[j] = acc / static_cast<double>(n);
  }
  return w;
}

}  // namespace

Grid::Grid(CoordinateChart chart, Axis a0, Axis a1)
    : chart_(chart), axis0_(std::move(a0)), axis1_(std::move(a1)) {
  jacobian_.resize(axis0_.size());
  for (std::size_t i = 0; i < axis0_.size(); ++i) jacobian_[i] = chart_.jacobian({axis0_.nodes[i], 0.0});
  if (chart_.is_polar()) {
    theta_weights_[0] = std::vector<double>(axis1_.size(), axis1_.spacing);
    theta_weights_[1] = trig_moment_weights(axis1_.size(), 1);
    theta_weights_[2] = trig_moment_weights(axis1_.size(), 2);
  }
}

Grid Grid::polar(std::size_t n_r, std::size_t n_theta, double r_max) {
  if (n_r < 3) throw InvalidInput("polar grid needs at least 3 radial nodes");
  if (n_theta < 4 || n_theta % 2 != 0) throw InvalidInput("polar grid needs an even n_theta >= 4");
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InvalidInput("polar grid needs r_max > 0");
  Axis r = cell_centred_axis(n_r, 0.0, r_max);
  Axis th;
  th.periodic = true;
  th.lower = 0.0;
  th.upper = kTwoPi;
  th.spacing = kTwoPi / static_cast<double>(n_theta);
  th.nodes.resize(n_theta);
  for (std::size_t j = 0; j < n_theta; ++j) th.nodes[j] = static_cast<double>(j) * th.spacing;
  return Grid(CoordinateChart::polar(), std::move(r), std::move(th));
}

Grid Grid::cartesian(std::size_t n_x, std::size_t n_y, double half_x, double half_y) {
  if (n_x < 3 || n_y < 3) throw InvalidInput("cartesian grid needs at least 3 nodes per axis");
  if (!(half_x > 0.0) || !(half_y > 0.0)) throw InvalidInput("cartesian grid needs positive extents");
  return Grid(CoordinateChart::cartesian(), cell_centred_axis(n_x, -half_x, half_x),
              cell_centred_axis(n_y, -half_y, half_y));
}

const std::vector<double>& Grid::theta_moment_weights(int power) const {
  if (!chart_.is_polar()) throw InvalidInput("angular moment weights exist on polar grids only");
  if (power < 0 || power > 2) throw InvalidInput("angular moment power must be 0, 1 or 2");
  return theta_weights_[static_cast<std::size_t>(power)];
}

void check_shape(const Grid& grid, const Field& f, const char* what) {
  if (f.n0() != grid.n0() || f.n1() != grid.n1()) {
    throw InvalidInput(std::string(what) + ": field shape does not match the grid");
  }
}

double integrate(const Grid& grid, const Field& f) {
  check_shape(grid, f, "integrate");
  double total = 0.0;
  for (std::size_t i = 0; i < grid.n0(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < grid.n1(); ++j) {
      const double v = f(i, j);
      if (!std::isfinite(v)) throw InvalidInput("integrate: non-finite sample");
      row += v;
    }
    total += grid.cell_weight(i) * row;
  }
  return total;
}

double integrate_axis1_moment(const Grid& grid, const Field& f, int power) {
  check_shape(grid, f, "integrate_axis1_moment");
  if (!grid.chart().is_polar()) {
    Field g = f;
    for (std::size_t i = 0; i < grid.n0(); ++i)
      for (std::size_t j = 0; j < grid.n1(); ++j) g(i, j) *= std::pow(grid.axis1().nodes[j], power);
    return integrate(grid, g);
  }
  const auto& w = grid.theta_moment_weights(power);
  double total = 0.0;
  for (std::size_t i = 0; i < grid.n0(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < grid.n1(); ++j) {
      if (!std::isfinite(f(i, j))) throw InvalidInput("integrate: non-finite sample");
      row += w[j] * f(i, j);
    }
    total += grid.jacobian(i) * grid.h0() * row;
  }
  return total;
}

double integrate_axis0_moment(const Grid& grid, const Field& f, int power) {
  check_shape(grid, f, "integrate_axis0_moment");
  Field g = f;
  for (std::size_t i = 0; i < grid.n0(); ++i) {
    const double s = std::pow(grid.axis0().nodes[i], power);
    for (std::size_t j = 0; j < grid.n1(); ++j) g(i, j) *= s;
  }
  return integrate(grid, g);
}

Field coordinate_field(const Grid& grid, int axis) {
  Field c = grid.make_field();
  for (std::size_t i = 0; i < grid.n0(); ++i)
    for (std::size_t j = 0; j < grid.n1(); ++j) c(i, j) = axis == 0 ? grid.axis0().nodes[i] : grid.axis1().nodes[j];
  return c;
}

Field diff0(const Grid& grid, const Field& f, OriginRule rule) {
  check_shape(grid, f, "diff0");
  const std::size_t n0 = grid.n0(), n1 = grid.n1();
  const double h = grid.h0();
  Field d = grid.make_field();
  for (std::size_t j = 0; j < n1; ++j) {
    for (std::size_t i = 1; i + 1 < n0; ++i) d(i, j) = (f(i + 1, j) - f(i - 1, j)) / (2.0 * h);
    if (grid.chart().is_polar() && rule == OriginRule::antipodal) {
      d(0, j) = (f(1, j) - f(0, grid.antipode(j))) / (2.0 * h);
    } else {
      d(0, j) = (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) / (2.0 * h);
    }
    d(n0 - 1, j) = (3.0 * f(n0 - 1, j) - 4.0 * f(n0 - 2, j) + f(n0 - 3, j)) / (2.0 * h);
  }
  return d;
}

Field diff1(const Grid& grid, const Field& f) {
  check_shape(grid, f, "diff1");
  const std::size_t n0 = grid.n0(), n1 = grid.n1();
  const double h = grid.h1();
  Field d = grid.make_field();
  const bool periodic = grid.axis1().periodic;
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 1; j + 1 < n1; ++j) d(i, j) = (f(i, j + 1) - f(i, j - 1)) / (2.0 * h);
    if (periodic) {
      d(i, 0) = (f(i, 1) - f(i, n1 - 1)) / (2.0 * h);
      d(i, n1 - 1) = (f(i, 0) - f(i, n1 - 2)) / (2.0 * h);
    } else {
      d(i, 0) = (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) / (2.0 * h);
      d(i, n1 - 1) = (3.0 * f(i, n1 - 1) - 4.0 * f(i, n1 - 2) + f(i, n1 - 3)) / (2.0 * h);
    }
  }
  return d;
}

namespace {

double wrap_pi(double a) { return std::remainder(a, kTwoPi); }

// Sign-insensitive phase increment: half of the wrapped doubled difference.
double half_doubled(double a, double b) { return 0.5 * wrap_pi(2.0 * (a - b)); }

}  // namespace

PairField phase_gradient(const Grid& grid, const Field& phase) {
  check_shape(grid, phase, "phase_gradient");
  const std::size_t n0 = grid.n0(), n1 = grid.n1();
  const double h0 = grid.h0(), h1 = grid.h1();
  PairField g{grid.make_field(), grid.make_field()};
  for (std::size_t j = 0; j < n1; ++j) {
    for (std::size_t i = 1; i + 1 < n0; ++i) g.c0(i, j) = half_doubled(phase(i + 1, j), phase(i - 1, j)) / (2.0 * h0);
    g.c0(0, j) = (4.0 * half_doubled(phase(1, j), phase(0, j)) - half_doubled(phase(2, j), phase(0, j))) / (2.0 * h0);
    g.c0(n0 - 1, j) =
        (4.0 * half_doubled(phase(n0 - 1, j), phase(n0 - 2, j)) - half_doubled(phase(n0 - 1, j), phase(n0 - 3, j))) /
        (2.0 * h0);
  }
  const bool periodic = grid.axis1().periodic;
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 1; j + 1 < n1; ++j) g.c1(i, j) = half_doubled(phase(i, j + 1), phase(i, j - 1)) / (2.0 * h1);
    if (periodic) {
      g.c1(i, 0) = half_doubled(phase(i, 1), phase(i, n1 - 1)) / (2.0 * h1);
      g.c1(i, n1 - 1) = half_doubled(phase(i, 0), phase(i, n1 - 2)) / (2.0 * h1);
    } else {
      g.c1(i, 0) = (4.0 * half_doubled(phase(i, 1), phase(i, 0)) - half_doubled(phase(i, 2), phase(i, 0))) / (2.0 * h1);
      g.c1(i, n1 - 1) =
          (4.0 * half_doubled(phase(i, n1 - 1), phase(i, n1 - 2)) - half_doubled(phase(i, n1 - 1), phase(i, n1 - 3))) /
          (2.0 * h1);
    }
  }
  return g;
}

Field laplacian(const Grid& grid, const Field& f) {
  check_shape(grid, f, "laplacian");
  const std::size_t n0 = grid.n0(), n1 = grid.n1();
  const double h0 = grid.h0(), h1 = grid.h1();
  Field out = grid.make_field();
  if (grid.chart().is_polar()) {
    const auto& r = grid.axis0().nodes;
    for (std::size_t i = 0; i < n0; ++i) {
      const double r_in = r[i] - 0.5 * h0;  // zero at the origin face
      const double r_out = r[i] + 0.5 * h0;
      const double inv = 1.0 / (r[i] * h0 * h0);
      const double ang = 1.0 / (r[i] * r[i] * h1 * h1);
      for (std::size_t j = 0; j < n1; ++j) {
        const double c = f(i, j);
        const double up = i + 1 < n0 ? f(i + 1, j) : 0.0;
        const double down = i > 0 ? f(i - 1, j) : 0.0;
        double radial = r_out * (up - c);
        if (i > 0) radial -= r_in * (c - down);
        const double left = f(i, (j + n1 - 1) % n1);
        const double right = f(i, (j + 1) % n1);
        out(i, j) = radial * inv + (right - 2.0 * c + left) * ang;
      }
    }
    return out;
  }
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double c = f(i, j);
      const double xp = i + 1 < n0 ? f(i + 1, j) : 0.0;
      const double xm = i > 0 ? f(i - 1, j) : 0.0;
      const double yp = j + 1 < n1 ? f(i, j + 1) : 0.0;
      const double ym = j > 0 ? f(i, j - 1) : 0.0;
      out(i, j) = (xp - 2.0 * c + xm) / (h0 * h0) + (yp - 2.0 * c + ym) / (h1 * h1);
    }
  }
  return out;
}

Field divergence(const Grid& grid, const PairField& w) {
  check_shape(grid, w.c0, "divergence");
  check_shape(grid, w.c1, "divergence");
  if (!grid.chart().is_polar()) {
    Field d = diff0(grid, w.c0, OriginRule::one_sided);
    const Field d1 = diff1(grid, w.c1);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += d1[k];
    return d;
  }
  // r w^r is even under the antipodal continuation through the origin.
  Field flux = w.c0;
  for (std::size_t i = 0; i < grid.n0(); ++i)
    for (std::size_t j = 0; j < grid.n1(); ++j) flux(i, j) *= grid.axis0().nodes[i];
  Field d = diff0(grid, flux, OriginRule::antipodal);
  const Field d1 = diff1(grid, w.c1);
  for (std::size_t i = 0; i < grid.n0(); ++i)
    for (std::size_t j = 0; j < grid.n1(); ++j) d(i, j) = d(i, j) / grid.axis0().nodes[i] + d1(i, j);
  return d;
}

}  // namespace qhydro
