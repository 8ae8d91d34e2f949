#pragma once

#include "safelearn/core_types.hpp"

#include <cstdint>
#include <random>

namespace safelearn {

/// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

/**
 * Seeded random stream with a platform-stable output sequence.
 *
 * Engine: std::mt19937_64, whose output sequence the standard fixes exactly.
 * Uniforms take the top 53 bits: U = (x >> 11) * 2^-53, in [0, 1).
 * Normals use the Box-Muller transform on (1 - U1, U2), returning
 * sqrt(-2 ln(1 - U1)) cos(2 pi U2) and caching the sine branch for the next
 * call. std::normal_distribution is avoided because its algorithm is
 * implementation-defined.
 */
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Vector normal_vector(Eigen::Index size);
  Vector uniform_vector(Eigen::Index size, double lo, double hi);
  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace safelearn
