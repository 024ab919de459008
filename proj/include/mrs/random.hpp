#pragma once

#include <cstdint>
#include <random>

namespace mrs {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used to turn nearby
/// integer seeds into well-separated engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Reproducible random stream: std::mt19937_64 (whose output sequence the
/// standard fixes) seeded with splitmix64(seed). Uniforms are built from the
/// top 53 bits directly rather than through std::uniform_real_distribution,
/// whose algorithm is implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Stream for replication `index` of an experiment seeded with `base_seed`.
  static RandomStream for_replication(std::uint64_t base_seed, std::uint64_t index) {
    return RandomStream(base_seed + index);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mrs
