#include "qhydro/states.hpp"

#include <cmath>

#include "qhydro/errors.hpp"

namespace qhydro {

ComplexField sample_wave(const Grid& grid, const CartesianWave& psi) {
  ComplexField out = grid.make_complex_field();
  const bool polar = grid.chart().is_polar();
  for (std::size_t i = 0; i < grid.n0(); ++i)
    for (std::size_t j = 0; j < grid.n1(); ++j) {
      const Point2 q = grid.point(i, j);
      const auto z = polar ? to_cartesian(q) : std::array<double, 2>{q.q0, q.q1};
      out(i, j) = psi(z[0], z[1]);
    }
  return out;
}

double oscillator_radial(int n_r, int n, double r, double mass, double hbar, double omega) {
  if (n_r < 0) throw InvalidInput("radial quantum number must be non-negative");
  const unsigned a = static_cast<unsigned>(std::abs(n));
  const double l2 = hbar / (mass * omega);
  const double x = r * r / l2;
  // C^2 = n_r! / (pi (n_r + |n|)! l^(2|n| + 2))
  const double log_c2 = std::lgamma(n_r + 1.0) - std::log(kPi) - std::lgamma(n_r + a + 1.0) -
                        (a + 1.0) * std::log(l2);
  return std::exp(0.5 * log_c2) * std::pow(r, a) * std::assoc_laguerre(static_cast<unsigned>(n_r), a, x) *
         std::exp(-0.5 * x);
}

CartesianWave oscillator_eigenstate(int n_r, int n, double mass, double hbar, double omega) {
  if (n_r < 0) throw InvalidInput("radial quantum number must be non-negative");
  return [=](double x, double y) {
    const double r = std::hypot(x, y);
    return std::polar(1.0, n * std::atan2(y, x)) * oscillator_radial(n_r, n, r, mass, hbar, omega);
  };
}

CartesianWave gaussian_packet(const GaussianPacket& p) {
  if (!(p.sigma_x > 0.0) || !(p.sigma_y > 0.0)) throw InvalidInput("packet widths must be positive");
  const double norm = 1.0 / std::sqrt(2.0 * kPi * p.sigma_x * p.sigma_y);
  return [=](double x, double y) {
    const double dx = x - p.x0, dy = y - p.y0;
    const double envelope =
        norm * std::exp(-dx * dx / (4.0 * p.sigma_x * p.sigma_x) - dy * dy / (4.0 * p.sigma_y * p.sigma_y));
    return std::polar(envelope, p.kx * x + p.ky * y + p.chirp * dx * dx);
  };
}

}  // namespace qhydro
