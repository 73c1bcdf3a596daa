// Seeded random number utilities. Distributions are hand-rolled on top of
// mt19937_64 so byte-identical replays do not depend on the standard
// library's distribution internals.

#ifndef MIRRORBENCH_RNG_HPP
#define MIRRORBENCH_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace mirrorbench {

/// splitmix64 step; used to derive independent per-trial seeds from one
/// experiment seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    // Modulo bias is negligible for the small n used here.
    return engine_() % n;
  }

  /// Standard normal via Box-Muller; consumes exactly two draws per call.
  double normal01() {
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal01(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mirrorbench

#endif  // MIRRORBENCH_RNG_HPP
