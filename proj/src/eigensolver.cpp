#include "qhydro/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qhydro {

std::vector<double> RadialMesh::nodes() const {
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = node(i);
  return r;
}

Tridiagonal radial_operator(const PhysicalParams& params, double alpha, const RadialMesh& mesh) {
  if (mesh.n < 3 || !(mesh.r_max > 0.0)) throw InvalidInput("radial mesh needs n >= 3 and r_max > 0");
  if (!std::isfinite(alpha)) throw InvalidInput("alpha must be finite");
  const double c = params.hbar() * params.hbar() / (2.0 * params.mass());
  const double h = mesh.h();
  Tridiagonal t;
  t.diag.resize(mesh.n);
  t.off.resize(mesh.n - 1);
  for (std::size_t i = 0; i < mesh.n; ++i) {
    const double r = mesh.node(i);
    const double r_in = i == 0 ? 0.0 : r - 0.5 * h;
    const double r_out = r + 0.5 * h;
    const double v = params.potential(r);
    if (!std::isfinite(v)) throw InvalidInput("potential is not finite at r = " + std::to_string(r));
    t.diag[i] = c * ((r_in + r_out) / (r * h * h) + alpha * alpha / (r * r)) + v;
    if (i + 1 < mesh.n) t.off[i] = -c * r_out / (h * h * std::sqrt(r * mesh.node(i + 1)));
  }
  return t;
}

std::size_t sturm_count(const Tridiagonal& t, double x) {
  const double tiny = std::numeric_limits<double>::min();
  std::size_t count = 0;
  double q = t.diag[0] - x;
  if (q == 0.0) q = -tiny;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < t.diag.size(); ++i) {
    q = t.diag[i] - x - t.off[i - 1] * t.off[i - 1] / q;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

double tridiagonal_eigenvalue(const Tridiagonal& t, std::size_t k) {
  if (k >= t.diag.size()) throw InvalidInput("eigenvalue index exceeds matrix size");
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < t.diag.size(); ++i) {
    const double radius = (i > 0 ? std::abs(t.off[i - 1]) : 0.0) + (i < t.off.size() ? std::abs(t.off[i]) : 0.0);
    lo = std::min(lo, t.diag[i] - radius);
    hi = std::max(hi, t.diag[i] + radius);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Solves (T - shift) y = b by LU with partial pivoting (fill-in: two
// superdiagonals).
std::vector<double> shifted_solve(const Tridiagonal& t, double shift, const std::vector<double>& b) {
  const std::size_t n = t.diag.size();
  std::vector<double> d(n), u1(n, 0.0), u2(n, 0.0), l(n, 0.0), y = b;
  std::vector<char> swapped(n, 0);
  for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] - shift;
  for (std::size_t i = 0; i + 1 < n; ++i) u1[i] = t.off[i];
  // Row i currently: d[i] at col i, u1[i] at i+1, u2[i] at i+2.
  std::vector<double> sub(t.off);  // entries below the diagonal
  const double eps = std::numeric_limits<double>::epsilon();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(t.diag[i]) + std::abs(shift));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    // Next row: sub[i] at col i, d[i+1] at i+1, u1[i+1] at i+2.
    if (std::abs(sub[i]) > std::abs(d[i])) {
      swapped[i] = 1;
      std::swap(d[i], sub[i]);
      std::swap(u1[i], d[i + 1]);
      const double next_u1 = u1[i + 1];
      u2[i] = next_u1;
      u1[i + 1] = 0.0;
      std::swap(y[i], y[i + 1]);
    }
    if (d[i] == 0.0) d[i] = eps * scale;
    l[i] = sub[i] / d[i];
    d[i + 1] -= l[i] * u1[i];
    u1[i + 1] -= l[i] * u2[i];
    y[i + 1] -= l[i] * y[i];
  }
  if (d[n - 1] == 0.0) d[n - 1] = eps * scale;
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    if (ii + 1 < n) s -= u1[ii] * x[ii + 1];
    if (ii + 2 < n) s -= u2[ii] * x[ii + 2];
    x[ii] = s / d[ii];
  }
  return x;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> tridiagonal_eigenvector(const Tridiagonal& t, double eigenvalue) {
  const std::size_t n = t.diag.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::sin(0.37 * static_cast<double>(i));
  for (int it = 0; it < 6; ++it) {
    x = shifted_solve(t, eigenvalue, x);
    const double nrm = norm2(x);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalFailure("inverse iteration broke down");
    for (double& v : x) v /= nrm;
  }
  // Residual check: ||T x - lambda x|| relative to the operator scale.
  double res = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double y = (t.diag[i] - eigenvalue) * x[i];
    if (i > 0) y += t.off[i - 1] * x[i - 1];
    if (i + 1 < n) y += t.off[i] * x[i + 1];
    res += y * y;
    scale = std::max(scale, std::abs(t.diag[i]));
  }
  if (std::sqrt(res) > 1e-8 * std::max(1.0, scale)) throw NumericalFailure("inverse iteration did not converge");
  return x;
}

EigenstateSpec solve_radial(const PhysicalParams& params, double alpha, const RadialMesh& mesh, int n_r) {
  if (n_r < 0) throw InvalidInput("radial node count must be non-negative");
  const Tridiagonal t = radial_operator(params, alpha, mesh);
  const double eps = tridiagonal_eigenvalue(t, static_cast<std::size_t>(n_r));
  std::vector<double> phi = tridiagonal_eigenvector(t, eps);

  EigenstateSpec spec;
  spec.alpha = alpha;
  spec.n_r = n_r;
  spec.epsilon = eps;
  spec.mesh = mesh;
  spec.radial_profile.resize(mesh.n);
  double peak = 0.0;
  for (double v : phi) peak = std::max(peak, std::abs(v));
  // Positive near the origin.
  double sign = 1.0;
  for (double v : phi) {
    if (std::abs(v) > 1e-8 * peak) {
      sign = v > 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  double sum_sq = 0.0;
  for (double v : phi) sum_sq += v * v;
  const double norm = std::sqrt(kTwoPi * mesh.h() * sum_sq);
  double rpeak = 0.0;
  for (std::size_t i = 0; i < mesh.n; ++i) {
    spec.radial_profile[i] = sign * phi[i] / (norm * std::sqrt(mesh.node(i)));
    rpeak = std::max(rpeak, std::abs(spec.radial_profile[i]));
  }
  if (std::abs(spec.radial_profile.back()) > 1e-6 * rpeak) {
    throw NumericalFailure("radial eigenfunction tail exceeds 1e-6 of its peak at r_max; enlarge r_max");
  }
  int changes = 0;
  double last = 0.0;
  for (double v : spec.radial_profile) {
    if (std::abs(v) <= 1e-8 * rpeak) continue;
    if (last != 0.0 && (v > 0.0) != (last > 0.0)) ++changes;
    last = v;
  }
  if (changes != n_r) {
    throw NumericalFailure("radial eigenfunction has " + std::to_string(changes) + " sign changes, expected " +
                           std::to_string(n_r));
  }
  return spec;
}

std::vector<double> radial_equation_residual(const EigenstateSpec& spec, const PhysicalParams& params) {
  const Tridiagonal t = radial_operator(params, spec.alpha, spec.mesh);
  const std::size_t n = spec.mesh.n;
  // T acts on phi = sqrt(r) R; map back to R.
  std::vector<double> phi(n), out(n);
  for (std::size_t i = 0; i < n; ++i) phi[i] = std::sqrt(spec.mesh.node(i)) * spec.radial_profile[i];
  for (std::size_t i = 0; i < n; ++i) {
    double y = (t.diag[i] - spec.epsilon) * phi[i];
    if (i > 0) y += t.off[i - 1] * phi[i - 1];
    if (i + 1 < n) y += t.off[i] * phi[i + 1];
    out[i] = y / std::sqrt(spec.mesh.node(i));
  }
  return out;
}

namespace {

void check_mesh(const EigenstateSpec& spec, const Grid& grid) {
  if (!grid.chart().is_polar()) throw InvalidInput("eigenstates live on polar grids");
  if (grid.n0() != spec.mesh.n || std::abs(grid.axis0().upper - spec.mesh.r_max) > 1e-12 * spec.mesh.r_max) {
    throw InvalidInput("grid radial axis does not match the eigenstate mesh");
  }
}

}  // namespace

MadelungState eigenstate_density(const EigenstateSpec& spec, std::shared_ptr<const Grid> grid) {
  check_mesh(spec, *grid);
  MadelungState s;
  s.grid = grid;
  s.rho = grid->make_field();
  s.phase = grid->make_field();
  for (std::size_t i = 0; i < grid->n0(); ++i)
    for (std::size_t j = 0; j < grid->n1(); ++j) s.rho(i, j) = spec.radial_profile[i] * spec.radial_profile[i];
  normalize(s);
  return s;
}

ComplexField eigenstate_psi(const EigenstateSpec& spec, const Grid& grid, int winding) {
  check_mesh(spec, grid);
  ComplexField psi = grid.make_complex_field();
  for (std::size_t i = 0; i < grid.n0(); ++i)
    for (std::size_t j = 0; j < grid.n1(); ++j)
      psi(i, j) = std::polar(1.0, winding * grid.axis1().nodes[j]) * spec.radial_profile[i];
  return psi;
}

VelocityFields stationary_fields(const EigenstateSpec& spec, double alpha, std::shared_ptr<const Grid> grid,
                                 const PhysicalParams& params) {
  const MadelungState s = eigenstate_density(spec, grid);
  PairField v{grid->make_field(), grid->make_field()};
  for (std::size_t i = 0; i < grid->n0(); ++i) {
    const double r = grid->axis0().nodes[i];
    for (std::size_t j = 0; j < grid->n1(); ++j) v.c1(i, j) = params.hbar() * alpha / (params.mass() * r * r);
  }
  return osmotic_split(v, s, params);
}

WindingResult winding_number(const VelocityFields& fields, const Grid& grid, const PhysicalParams& params,
                             double r_loop) {
  if (!grid.chart().is_polar()) throw InvalidInput("winding number needs a polar grid");
  const auto& r = grid.axis0().nodes;
  if (!(r_loop >= r.front() && r_loop <= r.back())) throw InvalidInput("loop radius outside the grid nodes");
  std::size_t i0 = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), r_loop) - r.begin());
  i0 = i0 == 0 ? 0 : i0 - 1;
  const std::size_t i1 = std::min(i0 + 1, r.size() - 1);
  const double w = i1 == i0 ? 0.0 : (r_loop - r[i0]) / (r[i1] - r[i0]);
  const std::size_t n1 = grid.n1();
  double loop = 0.0;
  for (std::size_t j = 0; j < n1; ++j) {
    if (fields.flagged.size() == grid.size() && (fields.flagged[i0 * n1 + j] || fields.flagged[i1 * n1 + j])) {
      throw InvalidInput("loop radius crosses flagged nodes");
    }
    // Interpolate the covariant component r^2 v^theta.
    const double a = r[i0] * r[i0] * fields.v.c1(i0, j);
    const double b = r[i1] * r[i1] * fields.v.c1(i1, j);
    loop += grid.h1() * ((1.0 - w) * a + w * b);
  }
  WindingResult out;
  out.raw = params.mass() * loop / (kTwoPi * params.hbar());
  out.winding = static_cast<int>(std::lround(out.raw));
  out.quantized = std::abs(out.raw - out.winding) <= 0.1;
  return out;
}

StationaryResidual stationary_residual(const EigenstateSpec& spec, double alpha, const PhysicalParams& params,
                                       std::shared_ptr<const Grid> grid) {
  const MadelungState s = eigenstate_density(spec, grid);
  const Grid& g = *grid;
  // Signed amplitude keeps the quantum potential regular across radial nodes.
  Field amp = g.make_field();
  const double scale = std::sqrt(integrate(g, [&] {
    Field sq = g.make_field();
    for (std::size_t i = 0; i < g.n0(); ++i)
      for (std::size_t j = 0; j < g.n1(); ++j) sq(i, j) = spec.radial_profile[i] * spec.radial_profile[i];
    return sq;
  }()));
  for (std::size_t i = 0; i < g.n0(); ++i)
    for (std::size_t j = 0; j < g.n1(); ++j) amp(i, j) = spec.radial_profile[i] / scale;
  const Field lap = laplacian(g, amp);
  const double m = params.mass(), hbar = params.hbar(), nu = params.nu();

  StationaryResidual out;
  out.bernoulli = g.make_field();
  Field radial_sq = g.make_field();
  Field angular_sq = g.make_field();
  Field ratio = g.make_field();
  for (std::size_t k = 0; k < ratio.size(); ++k) ratio[k] = s.flagged[k] ? 0.0 : lap[k] / amp[k];
  const Field dtheta_ratio = diff1(g, ratio);
  for (std::size_t i = 0; i < g.n0(); ++i) {
    const double r = g.axis0().nodes[i];
    for (std::size_t j = 0; j < g.n1(); ++j) {
      const std::size_t k = i * g.n1() + j;
      if (s.flagged[k]) continue;
      const double q = -hbar * hbar / (2.0 * m) * ratio[k];
      const double b = hbar * hbar * alpha * alpha / (2.0 * m * r * r) + params.potential(r) + q - spec.epsilon;
      out.bernoulli[k] = b;
      radial_sq[k] = s.rho[k] * b * b;
      // Angular line with v^r = 0 and theta-independent v^theta.
      const double ang = -(2.0 * nu * nu / (r * r)) * dtheta_ratio[k];
      angular_sq[k] = s.rho[k] * r * r * ang * ang;
    }
  }
  out.radial = std::sqrt(integrate(g, radial_sq));
  out.angular = std::sqrt(integrate(g, angular_sq));
  return out;
}

}  // namespace qhydro
