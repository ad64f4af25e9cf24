#include "qhydro/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace qhydro {

MomentumFields momentum_fields(const VelocityFields& fields, const Grid& grid, const PhysicalParams& params) {
  const double m = params.mass();
  MomentumFields p{fields.u_plus, fields.u_minus};
  for (std::size_t i = 0; i < grid.n0(); ++i)
    for (std::size_t j = 0; j < grid.n1(); ++j) {
      const Diag2 g = grid.chart().metric(grid.point(i, j));
      p.plus.c0(i, j) *= m * g.d0;
      p.plus.c1(i, j) *= m * g.d1;
      p.minus.c0(i, j) *= m * g.d0;
      p.minus.c1(i, j) *= m * g.d1;
    }
  return p;
}

double momentum_mean(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params,
                     int i) {
  if (i != 0 && i != 1) throw InvalidInput("coordinate index must be 0 or 1");
  const Grid& g = state.g();
  Field f = g.make_field();
  for (std::size_t a = 0; a < g.n0(); ++a)
    for (std::size_t b = 0; b < g.n1(); ++b) {
      const Diag2 met = g.chart().metric(g.point(a, b));
      const double v = i == 0 ? fields.v.c0(a, b) : fields.v.c1(a, b);
      f(a, b) = params.mass() * (i == 0 ? met.d0 : met.d1) * v * state.rho(a, b);
    }
  return integrate(g, f);
}

const BoundTerms& UncertaintyReport::bound(int i, int j) const {
  for (const auto& b : bounds)
    if (b.i == i && b.j == j) return b;
  throw InvalidInput("no bound for the requested pair");
}

double UncertaintyReport::min_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : bounds) m = std::min(m, b.margin);
  return m;
}

namespace {

// Samples of everything a report needs plus an expectation operator
// E[f q1^power] (power 0..2). Grid nodes and particles both fit this shape.
struct Samples {
  ChartKind chart = ChartKind::polar;
  std::vector<double> q0, q1, gamma0;
  std::array<std::vector<double>, 2> plus, minus;
  std::function<double(const std::vector<double>&, int)> expect;
};

double moment(const Samples& s, int i, const std::vector<double>& f, double mu, int k) {
  if (i == 0) {
    std::vector<double> g(f.size());
    for (std::size_t n = 0; n < f.size(); ++n) g[n] = f[n] * std::pow(s.q0[n] - mu, k);
    return s.expect(g, 0);
  }
  if (k == 1) return s.expect(f, 1) - mu * s.expect(f, 0);
  return s.expect(f, 2) - 2.0 * mu * s.expect(f, 1) + mu * mu * s.expect(f, 0);
}

// Variance of x given its deviations d = x - E[x] (E[d] is ~0 up to rounding).
double variance_of_deviation(const Samples& s, const std::vector<double>& d) {
  std::vector<double> sq(d.size());
  for (std::size_t n = 0; n < d.size(); ++n) sq[n] = d[n] * d[n];
  const double shift = s.expect(d, 0);
  return s.expect(sq, 0) - shift * shift;
}

struct Flux {
  double lower = 0.0;
  double upper = 0.0;
};

double edge_value(double last, double previous) { return std::max(0.0, 1.5 * last - 0.5 * previous); }

// Boundary values of J rho (q^i - mu) on the faces normal to axis j.
Flux boundary_flux(const MadelungState& state, int i, int j, double mu) {
  const Grid& g = state.g();
  const std::size_t n0 = g.n0(), n1 = g.n1();
  const Field& rho = state.rho;
  Flux f;
  if (g.chart().is_polar()) {
    if (j == 0) {
      // J = r vanishes at the origin; only the outer circle contributes.
      const double r = g.axis0().upper;
      for (std::size_t b = 0; b < n1; ++b) {
        const double q = i == 0 ? r : g.axis1().nodes[b];
        f.upper += g.h1() * r * edge_value(rho(n0 - 1, b), rho(n0 - 2, b)) * (q - mu);
      }
    } else {
      // The cut: theta = 2pi from below and theta = 0 from above share row 0.
      for (std::size_t a = 0; a < n0; ++a) {
        const double r = g.axis0().nodes[a];
        const double w = g.h0() * r * rho(a, 0);
        f.upper += w * ((i == 0 ? r : kTwoPi) - mu);
        f.lower += w * ((i == 0 ? r : 0.0) - mu);
      }
    }
    return f;
  }
  const Axis& across = j == 0 ? g.axis1() : g.axis0();
  const std::size_t n_across = across.size();
  for (std::size_t t = 0; t < n_across; ++t) {
    auto at = [&](std::size_t k) { return j == 0 ? rho(k, t) : rho(t, k); };
    const std::size_t n_along = j == 0 ? n0 : n1;
    const double lo_edge = (j == 0 ? g.axis0() : g.axis1()).lower;
    const double hi_edge = (j == 0 ? g.axis0() : g.axis1()).upper;
    const double q_lo = i == j ? lo_edge : across.nodes[t];
    const double q_hi = i == j ? hi_edge : across.nodes[t];
    f.lower += across.spacing * edge_value(at(0), at(1)) * (q_lo - mu);
    f.upper += across.spacing * edge_value(at(n_along - 1), at(n_along - 2)) * (q_hi - mu);
  }
  return f;
}

UncertaintyReport assemble(const Samples& s, const MadelungState& state, const PhysicalParams& params,
                           const std::vector<std::pair<int, int>>& pairs) {
  UncertaintyReport rep;
  rep.chart = s.chart;
  const std::size_t n = s.q0.size();
  const std::vector<double> ones(n, 1.0);
  std::array<std::vector<double>, 2> pbar;  // centred (p+ + p-) / 2
  for (int i = 0; i < 2; ++i) {
    CoordinateStats& c = rep.coords[static_cast<std::size_t>(i)];
    c.mean = i == 0 ? s.expect(s.q0, 0) : s.expect(ones, 1);
    c.variance = moment(s, i, ones, c.mean, 2);
    // Deviations are formed before the half sum / difference so that the
    // parts are not polluted by rounding of p+ + p- when the spread is tiny.
    const auto& a = s.plus[static_cast<std::size_t>(i)];
    const auto& b = s.minus[static_cast<std::size_t>(i)];
    const double mean_a = s.expect(a, 0), mean_b = s.expect(b, 0);
    std::vector<double> da(n), db(n), diff(n), sum(n);
    for (std::size_t k = 0; k < n; ++k) {
      da[k] = a[k] - mean_a;
      db[k] = b[k] - mean_b;
      diff[k] = 0.5 * (da[k] - db[k]);
      sum[k] = 0.5 * (da[k] + db[k]);
    }
    c.momentum_mean = 0.5 * (mean_a + mean_b);
    c.variance_plus = variance_of_deviation(s, da);
    c.variance_minus = variance_of_deviation(s, db);
    c.osmotic_part = variance_of_deviation(s, diff);
    c.current_part = variance_of_deviation(s, sum);
    c.sigma2 = 0.5 * (c.variance_plus + c.variance_minus);
    const double gap = std::abs(c.sigma2 - (c.osmotic_part + c.current_part));
    c.decomposition_error = c.sigma2 > 0.0 ? gap / c.sigma2 : gap;
    pbar[static_cast<std::size_t>(i)] = std::move(sum);
  }
  if (s.chart == ChartKind::polar) rep.r_moment_product = rep.coords[0].mean * s.expect(s.gamma0, 0);

  const double hbar = params.hbar();
  for (const auto& [i, j] : pairs) {
    const CoordinateStats& ci = rep.coords[static_cast<std::size_t>(i)];
    const CoordinateStats& cj = rep.coords[static_cast<std::size_t>(j)];
    BoundTerms b;
    b.i = i;
    b.j = j;
    b.position_variance = ci.variance;
    b.momentum_sigma2 = cj.sigma2;
    b.lhs = b.position_variance * b.momentum_sigma2;
    b.delta = i == j ? 1.0 : 0.0;
    const Flux f = boundary_flux(state, i, j, ci.mean);
    b.boundary_flux_lower = f.lower;
    b.boundary_flux_upper = f.upper;
    if (s.chart == ChartKind::polar && j == 0) b.christoffel_term = moment(s, i, s.gamma0, ci.mean, 1);
    const double k = b.delta - (f.upper - f.lower) + b.christoffel_term;
    b.kennard_term = 0.25 * hbar * hbar * k * k;
    b.covariance = moment(s, i, pbar[static_cast<std::size_t>(j)], ci.mean, 1);
    b.covariance_term = b.covariance * b.covariance;
    b.rhs = b.kennard_term + b.covariance_term;
    b.margin = b.lhs - b.rhs;
    rep.bounds.push_back(b);
  }
  return rep;
}

const std::vector<std::pair<int, int>> kAllPairs = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};

Samples grid_samples(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params) {
  const Grid& g = state.g();
  check_shape(g, state.rho, "uncertainty");
  check_shape(g, fields.u_plus.c0, "uncertainty");
  Samples s;
  s.chart = g.chart().kind();
  s.q0 = coordinate_field(g, 0).values();
  s.q1 = coordinate_field(g, 1).values();
  s.gamma0.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) s.gamma0[k] = s.chart == ChartKind::polar ? 1.0 / s.q0[k] : 0.0;
  const MomentumFields p = momentum_fields(fields, g, params);
  s.plus = {p.plus.c0.values(), p.plus.c1.values()};
  s.minus = {p.minus.c0.values(), p.minus.c1.values()};
  auto grid = state.grid;
  const Field rho = state.rho;
  s.expect = [grid, rho](const std::vector<double>& f, int power) {
    Field w = rho;
    for (std::size_t k = 0; k < f.size(); ++k) w[k] *= f[k];
    return integrate_axis1_moment(*grid, w, power);
  };
  return s;
}

}  // namespace

UncertaintyReport uncertainty_report(const MadelungState& state, const VelocityFields& fields,
                                     const PhysicalParams& params) {
  return assemble(grid_samples(state, fields, params), state, params, kAllPairs);
}

BoundTerms general_bound(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params,
                         int i, int j) {
  if (i < 0 || i > 1 || j < 0 || j > 1) throw InvalidInput("coordinate indices must be 0 or 1");
  return assemble(grid_samples(state, fields, params), state, params, {{i, j}}).bounds.front();
}

BoundTerms radial_bound(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params) {
  if (!state.g().chart().is_polar()) throw InvalidInput("radial_bound needs a polar state");
  return general_bound(state, fields, params, 0, 0);
}

BoundTerms angular_bound(const MadelungState& state, const VelocityFields& fields, const PhysicalParams& params) {
  if (!state.g().chart().is_polar()) throw InvalidInput("angular_bound needs a polar state");
  return general_bound(state, fields, params, 1, 1);
}

// --- Ensemble estimates -------------------------------------------------------------

namespace {

template <class Report, class F>
void visit(Report& rep, F&& f) {
  for (auto& c : rep.coords) {
    f(c.mean);
    f(c.variance);
    f(c.momentum_mean);
    f(c.variance_plus);
    f(c.variance_minus);
    f(c.sigma2);
    f(c.osmotic_part);
    f(c.current_part);
    f(c.decomposition_error);
  }
  for (auto& b : rep.bounds) {
    f(b.position_variance);
    f(b.momentum_sigma2);
    f(b.lhs);
    f(b.delta);
    f(b.boundary_flux_lower);
    f(b.boundary_flux_upper);
    f(b.christoffel_term);
    f(b.kennard_term);
    f(b.covariance);
    f(b.covariance_term);
    f(b.rhs);
    f(b.margin);
  }
  f(rep.r_moment_product);
}

Samples particle_samples(const Ensemble& e, std::size_t begin, std::size_t end, const DriftField& up,
                         const DriftField& um, double mass, double r_min) {
  Samples s;
  s.chart = ChartKind::polar;
  const std::size_t n = end - begin;
  s.q0.resize(n);
  s.q1.resize(n);
  s.gamma0.resize(n);
  for (auto& v : s.plus) v.resize(n);
  for (auto& v : s.minus) v.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Particle p = e.particle(begin + k);
    const double th = p.wrapped();
    s.q0[k] = p.r;
    s.q1[k] = th;
    s.gamma0[k] = 1.0 / std::max(p.r, r_min);
    const DriftSample a = up.sample(p.r, th), b = um.sample(p.r, th);
    s.plus[0][k] = mass * a.ur;
    s.plus[1][k] = mass * p.r * p.r * a.utheta;
    s.minus[0][k] = mass * b.ur;
    s.minus[1][k] = mass * p.r * p.r * b.utheta;
  }
  const std::vector<double> theta = s.q1;
  s.expect = [theta](const std::vector<double>& f, int power) {
    double acc = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      double w = f[k];
      for (int q = 0; q < power; ++q) w *= theta[k];
      acc += w;
    }
    return acc / static_cast<double>(f.size());
  };
  return s;
}

}  // namespace

EnsembleReport ensemble_report(const MadelungState& state, const VelocityFields& fields,
                               const PhysicalParams& params, const Ensemble& ensemble) {
  const Grid& g = state.g();
  if (!g.chart().is_polar()) throw InvalidInput("ensemble reports need a polar state");
  const std::size_t n = ensemble.size();
  if (n < 2 * kParticleBlock) throw InvalidInput("ensemble report needs at least two particle blocks");
  const DriftField up(g, fields.u_plus), um(g, fields.u_minus);
  const double r_min = g.axis0().nodes.front();

  EnsembleReport out;
  out.particles = n;
  out.blocks = n / kParticleBlock;  // a trailing partial block joins only the pooled estimate
  out.value = assemble(particle_samples(ensemble, 0, n, up, um, params.mass(), r_min), state, params, kAllPairs);

  std::vector<std::vector<double>> per_block;
  for (std::size_t b = 0; b < out.blocks; ++b) {
    const auto rep = assemble(particle_samples(ensemble, b * kParticleBlock, (b + 1) * kParticleBlock, up, um,
                                               params.mass(), r_min),
                              state, params, kAllPairs);
    std::vector<double> flat;
    visit(rep, [&](const double& v) { flat.push_back(v); });
    per_block.push_back(std::move(flat));
  }
  out.standard_error = out.value;
  std::size_t idx = 0;
  const double nb = static_cast<double>(out.blocks);
  visit(out.standard_error, [&](double& v) {
    double mean = 0.0;
    for (const auto& f : per_block) mean += f[idx];
    mean /= nb;
    double var = 0.0;
    for (const auto& f : per_block) var += (f[idx] - mean) * (f[idx] - mean);
    v = std::sqrt(var / (nb - 1.0) / nb);
    ++idx;
  });
  std::size_t clipped = 0;
  for (std::size_t k = 0; k < n; ++k) clipped += ensemble.r[k] < r_min ? 1 : 0;
  out.inverse_r_clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  return out;
}

}  // namespace qhydro
