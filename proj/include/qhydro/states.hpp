#pragma once

// Closed-form wave functions used as inputs and oracles: 2D oscillator
// eigenstates and Gaussian packets, sampled on polar or Cartesian grids.

#include <complex>
#include <functional>

#include "qhydro/geometry.hpp"

namespace qhydro {

using CartesianWave = std::function<std::complex<double>(double x, double y)>;

/// psi(x, y) sampled at every node; polar nodes are mapped to Cartesian first.
ComplexField sample_wave(const Grid& grid, const CartesianWave& psi);

/// Normalised oscillator eigenstate with radial quantum number n_r and angular
/// quantum number n: r^|n| L_{n_r}^{|n|}(r^2 / l^2) exp(-r^2 / 2 l^2) exp(i n theta),
/// l^2 = hbar / (m omega). Energy hbar omega (2 n_r + |n| + 1).
CartesianWave oscillator_eigenstate(int n_r, int n, double mass = 1.0, double hbar = 1.0, double omega = 1.0);

/// Radial factor of oscillator_eigenstate at radius r (signed, real).
double oscillator_radial(int n_r, int n, double r, double mass = 1.0, double hbar = 1.0, double omega = 1.0);

struct GaussianPacket {
  double x0 = 0.0, y0 = 0.0;
  double sigma_x = 1.0, sigma_y = 1.0;  // standard deviations of |psi|^2
  double kx = 0.0, ky = 0.0;            // phase gradient (momentum / hbar)
  double chirp = 0.0;                   // extra phase chirp * (x - x0)^2
};

/// Normalised Gaussian packet; |psi|^2 has the stated centre and widths.
CartesianWave gaussian_packet(const GaussianPacket& p);

}  // namespace qhydro
