#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "qhydro/eigensolver.hpp"
#include "qhydro/evolution.hpp"
#include "qhydro/sde.hpp"
#include "qhydro/states.hpp"

using namespace qhydro;
using doctest::Approx;

namespace {

std::shared_ptr<const Grid> polar(std::size_t n_r, std::size_t n_theta, double r_max) {
  return std::make_shared<const Grid>(Grid::polar(n_r, n_theta, r_max));
}

struct Moments {
  double mean = 0, var = 0, se_mean = 0, se_var = 0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m4 = 0;
  for (double v : x) {
    m.var += (v - m.mean) * (v - m.mean);
    m4 += std::pow(v - m.mean, 4);
  }
  m.var /= n - 1;
  m4 /= n;
  m.se_mean = std::sqrt(m.var / n);
  m.se_var = std::sqrt((m4 - m.var * m.var) / n);
  return m;
}

// One-step increments of many independent particles started at (r, theta).
void one_step(double r, double theta, double nu, double dt, std::size_t n, std::vector<double>& dr,
              std::vector<double>& dth) {
  dr.clear();
  dth.clear();
  for (std::size_t k = 0; k < n; ++k) {
    const auto xi = NoiseStream(77, k).normal_pair(0);
    const StepResult s = dt > 0 ? forward_step({r, theta}, {}, nu, dt, xi) : backward_step({r, theta}, {}, nu, dt, xi);
    dr.push_back(s.particle.r - r);
    dth.push_back(s.particle.theta - theta);
  }
}

// Reference masses of rho = exp(-r^2) / pi on the cells, integrated exactly.
Field gaussian_masses(const Grid& cells) {
  Field m = cells.make_field();
  for (std::size_t i = 0; i < cells.n0(); ++i) {
    const double a = i * cells.h0(), b = a + cells.h0();
    for (std::size_t j = 0; j < cells.n1(); ++j) m(i, j) = (std::exp(-a * a) - std::exp(-b * b)) / cells.n1();
  }
  return m;
}

struct Stationary {
  PhysicalParams params = PhysicalParams::oscillator();
  std::shared_ptr<const Grid> grid;
  EigenstateSpec spec;
  MadelungState state;
  VelocityFields fields;

  Stationary(double alpha, std::size_t n_theta = 32) {
    grid = polar(800, n_theta, 8.0);
    spec = solve_radial(params, alpha, RadialMesh{800, 8.0}, 0);
    state = eigenstate_density(spec, grid);
    fields = stationary_fields(spec, alpha, grid, params);
  }
};

}  // namespace

TEST_CASE("particle winding and wrapped angle") {
  const Particle a{1.0, -0.1};
  CHECK(a.winding() == -1);
  CHECK(a.wrapped() == Approx(kTwoPi - 0.1));
  const Particle b{1.0, kTwoPi + 0.1};
  CHECK(b.winding() == 1);
  CHECK(b.wrapped() == Approx(0.1));
  const Particle c{1.0, 3.0};
  CHECK(c.winding() == 0);
  CHECK(c.wrapped() == 3.0);
}

TEST_CASE("deterministic steps") {
  const std::pair<double, double> xi{0.7, -1.2};
  StepResult s = forward_step({1.3, 0.4}, {}, 0.0, 1e-2, xi);
  CHECK(s.particle.r == 1.3);
  CHECK(s.particle.theta == 0.4);
  s = forward_step({1.3, 0.4}, {0.5, 0.0}, 0.0, 1e-2, xi);
  CHECK(s.particle.r == Approx(1.305).epsilon(1e-15));
  s = backward_step({1.3, 0.4}, {}, 0.0, -1e-2, xi);
  CHECK(s.particle.r == 1.3);
  CHECK(s.particle.theta == 0.4);
  CHECK_THROWS_AS(forward_step({1.0, 0.0}, {}, 0.5, -1e-3, xi), InvalidInput);
  CHECK_THROWS_AS(backward_step({1.0, 0.0}, {}, 0.5, 1e-3, xi), InvalidInput);
  CHECK_THROWS_AS(forward_step({0.0, 0.0}, {}, 0.5, 1e-3, xi), InvalidInput);
}

TEST_CASE("overshooting the origin reflects") {
  const StepResult s = forward_step({0.001, 1.0}, {-5.0, 0.0}, 0.0, 1e-3, {0.0, 0.0});
  CHECK(s.reflected);
  CHECK(s.particle.r == Approx(0.004));
  CHECK(s.particle.r > 0.0);
}

TEST_CASE("one-step moments of pure noise") {
  const double nu = 0.5, dt = 1e-3;
  std::vector<double> dr, dth;
  SUBCASE("forward from r = 1") {
    one_step(1.0, 0.3, nu, dt, 100000, dr, dth);
    const Moments mr = moments(dr), mt = moments(dth);
    CHECK(std::abs(mr.mean - nu * dt) < 3 * mr.se_mean);
    CHECK(std::abs(mt.var - 2 * nu * dt) < 3 * mt.se_var);
    CHECK(std::abs(mr.var - 2 * nu * dt) < 3 * mr.se_var);
  }
  SUBCASE("backward from r = 1") {
    one_step(1.0, 0.3, nu, -dt, 100000, dr, dth);
    const Moments mr = moments(dr), mt = moments(dth);
    CHECK(std::abs(mr.mean - nu * dt) < 3 * mr.se_mean);
    CHECK(std::abs(mt.var - 2 * nu * dt) < 3 * mt.se_var);
  }
  SUBCASE("angular diffusion scales as 1 / r^2") {
    for (double r : {0.5, 2.0}) {
      one_step(r, 5.0, nu, dt, 100000, dr, dth);
      const Moments mt = moments(dth);
      CHECK(std::abs(mt.var - 2 * nu * dt / (r * r)) < 3 * mt.se_var);
    }
  }
}

TEST_CASE("drift interpolation") {
  auto g = polar(100, 16, 4.0);
  PairField u{g->make_field(), g->make_field()};
  for (std::size_t i = 0; i < g->n0(); ++i)
    for (std::size_t j = 0; j < g->n1(); ++j) {
      const double r = g->axis0().nodes[i];
      u.c0(i, j) = 1.0 / r - r;
      u.c1(i, j) = 1.0 / (r * r);
    }
  const DriftField f(*g, u);
  for (double r : {0.013, 0.5, 1.37, 3.9})
    for (double t : {0.0, 2.2, 6.27}) {
      const DriftSample s = f.sample(r, t);
      CHECK(s.ur == Approx(1.0 / r - r).epsilon(1e-3));
      CHECK(s.utheta == Approx(1.0 / (r * r)).epsilon(1e-12));
    }
  const DriftSample z = DriftField::zero().sample(1.0, 1.0);
  CHECK(z.ur == 0.0);
  CHECK(z.utheta == 0.0);
}

TEST_CASE("density estimation") {
  const Grid cells = Grid::polar(20, 8, 4.0);
  SUBCASE("Rayleigh sample matches exp(-r^2)") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Ensemble e;
    for (int k = 0; k < 100000; ++k) {
      e.r.push_back(std::sqrt(-std::log(1.0 - u(gen))));
      e.theta.push_back(kTwoPi * u(gen) + kTwoPi * (k % 3 - 1));
    }
    const DensityEstimate d = estimate_density(e, cells, Exec::parallel);
    CHECK(histogram_l1(d, cells, gaussian_masses(cells)) < 0.05);
    CHECK(integrate(cells, d.rho) + d.overflow == Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("all particles in one cell") {
    Ensemble e{std::vector<double>(5000, 1.1), std::vector<double>(5000, 2.4)};
    const DensityEstimate d = estimate_density(e, cells, Exec::serial);
    CHECK(integrate(cells, d.rho) == Approx(1.0).epsilon(1e-14));
    std::size_t nonzero = 0;
    for (double v : d.rho.values()) nonzero += v > 0.0;
    CHECK(nonzero == 1);
  }
  SUBCASE("winding is ignored") {
    Ensemble a{{1.0, 2.0}, {0.1, 0.1}}, b{{1.0, 2.0}, {0.1 + kTwoPi, 0.1 - 2 * kTwoPi}};
    CHECK(estimate_density(a, cells, Exec::serial).rho.values() == estimate_density(b, cells, Exec::serial).rho.values());
  }
  SUBCASE("empty ensembles are rejected") { CHECK_THROWS_AS(estimate_density(Ensemble{}, cells, Exec::serial), InvalidInput); }
}

TEST_CASE("sampling an eigenstate reproduces its density") {
  const Stationary s(1.0);
  const Grid cells = Grid::polar(20, 8, 4.0);
  const Ensemble e = sample_ensemble(s.state, 100000, 3, Exec::parallel);
  CHECK(e.size() == 100000);
  const Field ref = cell_masses(cells, [](double r, double) { return r * r * std::exp(-r * r) / kPi; });
  CHECK(histogram_l1(estimate_density(e, cells, Exec::parallel), cells, ref) < 0.05);
  // interpolated grid density agrees with the closed form
  const auto rho = interpolated_density(s.state);
  CHECK(rho(1.0, 0.3) == Approx(std::exp(-1.0) / kPi).epsilon(1e-4));
  CHECK(rho(9.0, 0.3) == 0.0);
}

TEST_CASE("stationary ensembles keep their law forward and backward") {
  const Stationary s(1.0);
  const Grid cells = Grid::polar(20, 8, 4.0);
  const Field ref = cell_masses(cells, interpolated_density(s.state));
  for (Direction dir : {Direction::forward, Direction::backward}) {
    EnsembleRun run{sample_ensemble(s.state, 100000, 5, Exec::parallel), 0.0, 0, 0,
                    RunConfig{1e-3, 100, 100000, 5, dir}};
    run_ensemble(run, DriftField::from(*s.grid, s.fields, dir), s.params.nu(), Exec::parallel);
    CHECK(run.particles.size() == 100000);
    CHECK(run.time == Approx(dir == Direction::forward ? 0.1 : -0.1));
    CHECK(histogram_l1(estimate_density(run.particles, cells, Exec::parallel), cells, ref) < 0.05);
    CHECK(static_cast<double>(run.reflections) / 1e7 < 1e-4);
  }
}

TEST_CASE("parallel and serial kernels agree bit for bit") {
  const Stationary s(1.0);
  const DriftField drift = DriftField::from(*s.grid, s.fields, Direction::forward);
  const Grid cells = Grid::polar(10, 8, 3.0);
  Ensemble a = sample_ensemble(s.state, 10000, 9, Exec::serial);
  Ensemble b = sample_ensemble(s.state, 10000, 9, Exec::parallel);
  CHECK(a.r == b.r);
  CHECK(a.theta == b.theta);
  DriftAccumulator acc_a(cells, 10000, 1.0), acc_b(cells, 10000, 1.0);
  for (std::uint64_t step = 0; step < 20; ++step) {
    step_ensemble(a, drift, s.params.nu(), 1e-3, Direction::forward, 9, step, Exec::serial, &acc_a);
    step_ensemble(b, drift, s.params.nu(), 1e-3, Direction::forward, 9, step, Exec::parallel, &acc_b);
  }
  CHECK(a.r == b.r);
  CHECK(a.theta == b.theta);
  CHECK(estimate_density(a, cells, Exec::serial).rho.values() == estimate_density(b, cells, Exec::parallel).rho.values());
  const DriftEstimate ea = finalize(acc_a), eb = finalize(acc_b);
  CHECK(ea.u_plus.c0.values() == eb.u_plus.c0.values());
  CHECK(ea.ptheta_plus == eb.ptheta_plus);

  Ensemble c = sample_ensemble(s.state, 10000, 10, Exec::serial);
  CHECK(c.r != a.r);
}

TEST_CASE("deterministic flow: estimates equal the input drift") {
  const Grid cells = Grid::polar(8, 8, 4.0);
  Trajectories tr;
  tr.dt = 1e-2;
  tr.nu = 0.0;
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.2, 3.5), t(0.0, kTwoPi);
  std::vector<Particle> p;
  for (int k = 0; k < 5000; ++k) p.push_back({u(gen), t(gen)});
  tr.snapshots.push_back(p);
  for (int s = 0; s < 5; ++s) {
    for (auto& q : p) q = forward_step(q, {0.3, 0.2}, 0.0, tr.dt, {0.0, 0.0}).particle;
    tr.snapshots.push_back(p);
  }
  const DriftEstimate est = estimate_drifts(tr, cells);
  std::size_t estimated = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!est.estimated[c]) continue;
    ++estimated;
    CHECK(est.u_plus.c0[c] == Approx(0.3).epsilon(1e-9));
    CHECK(est.u_plus.c1[c] == Approx(0.2).epsilon(1e-9));
    CHECK(est.u_minus.c0[c] == Approx(0.3).epsilon(1e-9));
    CHECK(est.u_minus.c1[c] == Approx(0.2).epsilon(1e-9));
  }
  CHECK(estimated > 40);
  tr.snapshots.resize(1);
  CHECK_THROWS_AS(estimate_drifts(tr, cells), InvalidInput);
}

TEST_CASE("ground state drifts are -r forward and +r backward") {
  const Stationary s(0.0, 16);
  const Grid cells = Grid::polar(8, 4, 2.4);
  const std::size_t n = 100000;
  EnsembleRun run{sample_ensemble(s.state, n, 21, Exec::parallel), 0.0, 0, 0, RunConfig{1e-3, 100, n, 21}};
  DriftAccumulator acc(cells, n, 1.0);
  run_ensemble(run, DriftField::from(*s.grid, s.fields, Direction::forward), s.params.nu(), Exec::parallel, &acc);
  const DriftEstimate est = finalize(acc);
  // oracle: the rho-weighted cell average of -r under rho ~ exp(-r^2)
  // 56 cell comparisons: 4 sigma per cell, plus a chi-square bound on the pooled z-scores
  double chi2 = 0.0;
  std::size_t dof = 0;
  for (std::size_t i = 1; i < cells.n0(); ++i) {
    const double a = i * cells.h0(), b = a + cells.h0();
    const double mass = 0.5 * (std::exp(-a * a) - std::exp(-b * b));
    const double first = 0.5 * (a * std::exp(-a * a) - b * std::exp(-b * b)) +
                         0.25 * std::sqrt(kPi) * (std::erf(b) - std::erf(a));
    const double mean_r = first / mass;
    for (std::size_t j = 0; j < cells.n1(); ++j) {
      const std::size_t c = i * cells.n1() + j;
      REQUIRE(est.estimated[c]);
      const double zp = (est.u_plus.c0[c] + mean_r) / est.se_plus.c0[c];
      const double zm = (est.u_minus.c0[c] - mean_r) / est.se_minus.c0[c];
      CHECK(std::abs(zp) < 4.0);
      CHECK(std::abs(zm) < 4.0);
      chi2 += zp * zp + zm * zm;
      dof += 2;
    }
  }
  CHECK(chi2 < dof + 4.0 * std::sqrt(2.0 * dof));
}

TEST_CASE("covariant angular drift of the N = 1 eigenstate is hbar") {
  const Stationary s(1.0);
  const Grid cells = Grid::polar(10, 8, 3.0);
  const std::size_t n = 40000;
  for (Direction dir : {Direction::forward, Direction::backward}) {
    EnsembleRun run{sample_ensemble(s.state, n, 31, Exec::parallel), 0.0, 0, 0, RunConfig{1e-3, 200, n, 31, dir}};
    DriftAccumulator acc(cells, n, s.params.mass());
    run_ensemble(run, DriftField::from(*s.grid, s.fields, dir), s.params.nu(), Exec::parallel, &acc);
    const DriftEstimate est = finalize(acc);
    // forward runs measure p_theta^+ cleanly; backward runs measure p_theta^-
    if (dir == Direction::forward)
      CHECK(std::abs(est.ptheta_plus - 1.0) < 3 * est.ptheta_plus_se);
    else
      CHECK(std::abs(est.ptheta_minus - 1.0) < 3 * est.ptheta_minus_se);
  }
}

TEST_CASE("forward ensemble follows the grid-evolved density of a moving packet") {
  auto g = polar(200, 64, 8.0);
  const PhysicalParams p = PhysicalParams::oscillator();
  GaussianPacket gp;
  gp.x0 = 1.5;
  gp.sigma_x = gp.sigma_y = 0.7;
  gp.ky = 0.5;
  const ComplexField psi = sample_wave(*g, gaussian_packet(gp));
  const MadelungState s0 = decompose(psi, g).state;
  const PolarPropagator prop(g, p, 1e-3);
  const std::size_t n = 100000;
  CoupledRun run = run_coupled(sample_ensemble(s0, n, 41, Exec::parallel), psi, prop, Direction::forward, 300, 41,
                               Exec::parallel);
  CHECK(run.time == Approx(0.3));
  const Grid cells = Grid::polar(16, 16, 4.0);
  const Field ref = cell_masses(cells, interpolated_density(decompose(run.psi, g).state));
  const Field start = cell_masses(cells, interpolated_density(s0));
  const DensityEstimate hist = estimate_density(run.particles, cells, Exec::parallel);
  CHECK(histogram_l1(hist, cells, ref) < 0.05);
  // the packet has moved: the initial density is a worse match
  CHECK(histogram_l1(hist, cells, start) > histogram_l1(hist, cells, ref));
}
