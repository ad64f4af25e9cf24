#include <doctest.h>

#include <cmath>
#include <memory>

#include "qhydro/sde.hpp"
#include "qhydro/states.hpp"
#include "qhydro/uncertainty.hpp"

using namespace qhydro;
using doctest::Approx;

namespace {

struct Prepared {
  PhysicalParams params;
  MadelungState state;
  VelocityFields fields;
};

Prepared prepare(const Grid& grid, const CartesianWave& psi, PhysicalParams params = PhysicalParams::oscillator()) {
  auto g = std::make_shared<const Grid>(grid);
  Prepared p{params, decompose(sample_wave(*g, psi), g).state, {}};
  p.fields = velocity_fields(p.state, params);
  return p;
}

}  // namespace

TEST_CASE("momentum fields lower the index with the metric") {
  const Prepared p = prepare(Grid::polar(100, 32, 6.0), oscillator_eigenstate(0, 2), PhysicalParams(2.0, 1.0));
  const MomentumFields m = momentum_fields(p.fields, p.state.g(), p.params);
  for (std::size_t i = 10; i < 60; i += 7) {
    const double r = p.state.g().axis0().nodes[i];
    CHECK(m.plus.c1(i, 3) == Approx(2.0 * r * r * p.fields.u_plus.c1(i, 3)));
    CHECK(m.minus.c0(i, 3) == Approx(2.0 * p.fields.u_minus.c0(i, 3)));
    CHECK(m.plus.c1(i, 3) == Approx(2.0));  // hbar N
  }
}

TEST_CASE("ground state saturates the radial bound") {
  // rho = exp(-r^2)/pi: Var r = 1 - pi/4, p_r^pm = -/+ r, E[r] E[1/r] = pi/2
  const Prepared p = prepare(Grid::polar(2000, 8, 8.0), oscillator_eigenstate(0, 0));
  const UncertaintyReport rep = uncertainty_report(p.state, p.fields, p.params);
  const double var_r = 1.0 - kPi / 4.0;
  CHECK(rep.coords[0].variance == Approx(var_r).epsilon(1e-5));
  CHECK(rep.coords[0].sigma2 == Approx(var_r).epsilon(1e-4));
  CHECK(std::abs(rep.r_moment_product - kPi / 2.0) < 1e-4);
  const BoundTerms& b = rep.bound(0, 0);
  CHECK(b.lhs == Approx(0.25 * std::pow(2.0 - kPi / 2.0, 2)).epsilon(1e-4));
  CHECK(b.christoffel_term == Approx(1.0 - kPi / 2.0).epsilon(1e-4));
  CHECK(std::abs(b.covariance) < 1e-8);
  CHECK(std::abs(b.boundary_flux_upper) < 1e-12);
  CHECK(std::abs(b.margin) < 1e-5);
  CHECK(rep.coords[0].decomposition_error < 1e-8);
}

TEST_CASE("angular statistics of a vortex eigenstate") {
  const Prepared p = prepare(Grid::polar(800, 64, 8.0), oscillator_eigenstate(0, 1));
  const UncertaintyReport rep = uncertainty_report(p.state, p.fields, p.params);
  const CoordinateStats& t = rep.coords[1];
  CHECK(t.mean == Approx(kPi).epsilon(1e-10));
  CHECK(t.variance == Approx(kPi * kPi / 3.0).epsilon(1e-10));
  CHECK(t.momentum_mean == Approx(1.0).epsilon(1e-10));
  CHECK(t.sigma2 < 1e-10);
  const BoundTerms& b = angular_bound(p.state, p.fields, p.params);
  // the cut carries all of the delta term: rho on theta = 0 integrates to 1 / 2pi
  CHECK(b.boundary_flux_upper - b.boundary_flux_lower == Approx(1.0).epsilon(1e-10));
  CHECK(b.kennard_term < 1e-18);
  CHECK(std::abs(b.rhs) < 1e-12);
  CHECK(std::abs(b.margin) < 1e-10);
}

TEST_CASE("Cartesian Gaussian reaches the Kennard bound") {
  const Grid box = Grid::cartesian(256, 256, 8.0, 8.0);
  SUBCASE("unchirped") {
    const Prepared p = prepare(box, gaussian_packet({}));
    const UncertaintyReport rep = uncertainty_report(p.state, p.fields, p.params);
    for (int i = 0; i < 2; ++i) {
      const CoordinateStats& c = rep.coords[static_cast<std::size_t>(i)];
      CHECK(std::sqrt(c.variance * c.sigma2) == Approx(0.5).epsilon(1e-8));
      CHECK(rep.bound(i, i).kennard_term == Approx(0.25).epsilon(1e-8));
      CHECK(std::abs(rep.bound(i, i).margin) < 1e-8);
      CHECK(c.decomposition_error < 1e-8);
    }
    CHECK(std::abs(rep.bound(0, 1).rhs) < 1e-10);
    CHECK(rep.r_moment_product == 0.0);
  }
  SUBCASE("chirped and displaced") {
    // phase beta x^2 with Var x = s^2: E[x p] = 2 beta hbar s^2, sigma2 = hbar^2 / 4s^2 + 4 beta^2 hbar^2 s^2
    GaussianPacket gp;
    gp.x0 = 0.5;
    gp.sigma_x = 0.8;
    gp.kx = 0.4;
    gp.chirp = 0.3;
    const Prepared p = prepare(box, gaussian_packet(gp));
    const UncertaintyReport rep = uncertainty_report(p.state, p.fields, p.params);
    const double s2 = 0.64, beta = 0.3;
    const CoordinateStats& x = rep.coords[0];
    CHECK(x.mean == Approx(0.5).epsilon(1e-8));
    CHECK(x.momentum_mean == Approx(0.4).epsilon(1e-6));
    CHECK(x.osmotic_part == Approx(0.25 / s2).epsilon(1e-6));
    CHECK(x.current_part == Approx(4 * beta * beta * s2).epsilon(1e-6));
    const BoundTerms& b = rep.bound(0, 0);
    CHECK(b.covariance == Approx(2 * beta * s2).epsilon(1e-6));
    CHECK(std::abs(b.margin) < 1e-6);
  }
}

TEST_CASE("named bounds agree with the general form") {
  GaussianPacket gp;
  gp.x0 = 1.2;
  gp.y0 = 0.4;
  gp.ky = 0.6;
  const Prepared p = prepare(Grid::polar(200, 64, 8.0), gaussian_packet(gp));
  const BoundTerms r = radial_bound(p.state, p.fields, p.params);
  const BoundTerms g = general_bound(p.state, p.fields, p.params, 0, 0);
  CHECK(r.lhs == g.lhs);
  CHECK(r.rhs == g.rhs);
  CHECK(angular_bound(p.state, p.fields, p.params).margin == general_bound(p.state, p.fields, p.params, 1, 1).margin);
  CHECK_THROWS_AS(general_bound(p.state, p.fields, p.params, 2, 0), InvalidInput);
  const Prepared c = prepare(Grid::cartesian(32, 32, 5.0, 5.0), gaussian_packet(gp));
  CHECK_THROWS_AS(radial_bound(c.state, c.fields, c.params), InvalidInput);
}

TEST_CASE("bounds hold for displaced, moving and chirped packets") {
  const Grid grid = Grid::polar(400, 128, 8.0);
  for (double width : {0.5, 0.8, 1.3})
    for (double x0 : {0.0, 1.5}) {
      GaussianPacket gp;
      gp.x0 = x0;
      gp.y0 = -0.3 * x0;
      gp.sigma_x = width;
      gp.sigma_y = 0.9 * width;
      gp.kx = -0.3;
      gp.ky = 0.8;
      gp.chirp = 0.2;
      const Prepared p = prepare(grid, gaussian_packet(gp));
      const UncertaintyReport rep = uncertainty_report(p.state, p.fields, p.params);
      CAPTURE(width);
      CAPTURE(x0);
      CHECK(rep.min_margin() >= -1e-6);
      CHECK(rep.r_moment_product >= 1.0);
      for (const CoordinateStats& c : rep.coords) CHECK(c.decomposition_error < 1e-8);
    }
}

TEST_CASE("ensemble report agrees with the grid within its errors") {
  const Prepared p = prepare(Grid::polar(800, 64, 8.0), oscillator_eigenstate(0, 1));
  const UncertaintyReport grid = uncertainty_report(p.state, p.fields, p.params);
  const Ensemble e = sample_ensemble(p.state, 200000, 17, Exec::parallel);
  const EnsembleReport ens = ensemble_report(p.state, p.fields, p.params, e);
  CHECK(ens.particles == 200000);
  CHECK(ens.blocks == 200000 / kParticleBlock);
  CHECK(ens.inverse_r_clip_fraction < 1e-4);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(ens.value.coords[i].mean - grid.coords[i].mean) < 4 * ens.standard_error.coords[i].mean);
    CHECK(std::abs(ens.value.coords[i].variance - grid.coords[i].variance) <
          4 * ens.standard_error.coords[i].variance);
  }
  CHECK(std::abs(ens.value.r_moment_product - grid.r_moment_product) < 4 * ens.standard_error.r_moment_product);
  CHECK(ens.value.bound(0, 0).margin > -3 * ens.standard_error.bound(0, 0).margin);
  CHECK_THROWS_AS(ensemble_report(p.state, p.fields, p.params, sample_ensemble(p.state, 3000, 1, Exec::serial)),
                  InvalidInput);
}
