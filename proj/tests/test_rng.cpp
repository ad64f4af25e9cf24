#include <doctest.h>

#include <cmath>

#include "qhydro/rng.hpp"

using namespace qhydro;

TEST_CASE("philox4x32-10 known answers") {
  using A = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        A{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("splitmix64 reference output") {
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafull);
}

TEST_CASE("streams are pure functions of seed, particle and step") {
  const NoiseStream a(42, 7), b(42, 7);
  for (std::uint64_t s : {0ull, 1ull, 999ull, 1ull << 40}) CHECK(a.normal_pair(s) == b.normal_pair(s));
  CHECK(NoiseStream(42, 7).normal_pair(3) != NoiseStream(42, 8).normal_pair(3));
  CHECK(NoiseStream(42, 7).normal_pair(3) != NoiseStream(43, 7).normal_pair(3));
  CHECK(NoiseStream(42, 7).uniform_pair(3) !=
        NoiseStream(42, 7, StreamPurpose::initial_sampling).uniform_pair(3));
}

TEST_CASE("normal draws have unit moments") {
  constexpr std::size_t n = 1000000;
  double s1 = 0, s2 = 0, sxy = 0, s4 = 0;
  // half the draws along one particle's steps, half across particles
  for (std::size_t k = 0; k < n / 2; ++k) {
    for (auto [x, y] : {NoiseStream(11, 3).normal_pair(k), NoiseStream(11, k).normal_pair(5)}) {
      s1 += x + y;
      s2 += x * x + y * y;
      s4 += x * x * x * x + y * y * y * y;
      sxy += x * y;
    }
  }
  const double m = 2.0 * n;  // scalar samples
  const double mean = s1 / m, var = s2 / m;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(m));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / m));
  CHECK(std::abs(s4 / m - 3.0) < 3.0 * std::sqrt(96.0 / m));
  CHECK(std::abs(sxy / n) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("uniform draws lie in [0, 1) with the right mean") {
  double sum = 0;
  constexpr std::size_t n = 200000;
  for (std::size_t k = 0; k < n; ++k) {
    const auto [u, v] = NoiseStream(5, k, StreamPurpose::initial_sampling).uniform_pair(0);
    CHECK_UNARY(u >= 0.0 && u < 1.0);
    CHECK_UNARY(v >= 0.0 && v < 1.0);
    sum += u + v;
  }
  CHECK(std::abs(sum / (2.0 * n) - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / (2.0 * n)));
}

TEST_CASE("neighbouring particle streams are uncorrelated") {
  constexpr std::size_t n = 200000;
  double c = 0;
  for (std::size_t s = 0; s < n; ++s) c += NoiseStream(9, 100).normal_pair(s).first * NoiseStream(9, 101).normal_pair(s).first;
  CHECK(std::abs(c / n) < 3.0 / std::sqrt(double(n)));
}
