#pragma once

#include <cmath>
#include <cstdint>

namespace spadi {

// splitmix64 finalizer; also used to derive independent streams.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Small counter-based generator. All randomness in the artifact flows through
// this type so results are pinned to the seed, independent of the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  // New stream statistically independent of this one.
  static Rng derive(uint64_t seed, uint64_t stream) {
    return Rng(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
  }

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 24-bit resolution.
  float uniform() { return float(next_u64() >> 40) * 0x1p-24f; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + int(next_u64() % uint64_t(hi - lo + 1));
  }

  // Standard Gumbel sample g = -log(-log(u)), u clamped to [1e-7, 1-1e-7].
  float gumbel() {
    double u = uniform();
    if (u < 1e-7) u = 1e-7;
    if (u > 1.0 - 1e-7) u = 1.0 - 1e-7;
    return float(-std::log(-std::log(u)));
  }

  float normal() {  // Box-Muller, one value per two draws
    double u1 = uniform();
    if (u1 < 1e-12) u1 = 1e-12;
    double u2 = uniform();
    return float(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2));
  }

 private:
  uint64_t state_;
};

}  // namespace spadi
