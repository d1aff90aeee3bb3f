#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "thg/models.hpp"
#include "thg/schedules.hpp"
#include "thg/vector.hpp"

namespace thg {

/// Counter-based normal generator: every draw is a pure function of
/// (seed, counter), so trajectories can be generated in any order or in
/// parallel and still be bit-identical.
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finaliser
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on (0, 1), never exactly 0.
  double uniform(std::uint64_t counter) const {
    const std::uint64_t bits = mix(mix(seed_) ^ mix(counter + 0x632be59bd9b4e019ULL));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal number `index` of this stream (Box-Muller, cosine branch).
  double normal(std::uint64_t index) const {
    const double u1 = uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector normal_vector(Eigen::Index dim) const {
    Vector v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v[k] = normal(static_cast<std::uint64_t>(k));
    return v;
  }

 private:
  std::uint64_t seed_;
};

/// Initial state x_T for one trajectory: N(0, sigma_T^2 I) in epsilon mode,
/// N(0, I) in velocity mode.
inline Vector initial_noise(const NoiseSchedule& schedule, PredictionMode mode, Eigen::Index dim,
                            std::uint64_t seed) {
  Vector z = CounterNormal(seed).normal_vector(dim);
  if (mode == PredictionMode::Epsilon) z *= schedule.sigma(schedule.t_max());
  return z;
}

}  // namespace thg
