#pragma once

// Counter-based random streams. Every draw is a pure function of
// (master seed, purpose, particle index, step), so results do not depend on
// thread count or scheduling.

#include <array>
#include <cstdint>
#include <utility>

namespace qhydro {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

/// Independent key spaces carved out of one master seed.
enum class StreamPurpose : std::uint64_t { step_noise = 1, initial_sampling = 2, moment_check = 3 };

class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t particle_index,
              StreamPurpose purpose = StreamPurpose::step_noise);

  /// Independent standard normal pair (xi_x, xi_y) for the given step.
  std::pair<double, double> normal_pair(std::uint64_t step) const;
  /// Two uniforms in [0, 1) for the given step.
  std::pair<double, double> uniform_pair(std::uint64_t step) const;

  std::uint64_t particle_index() const { return particle_; }

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t step) const;

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t particle_ = 0;
};

}  // namespace qhydro
