#pragma once

#include <cmath>
#include <cstdint>

namespace sodkit {

// splitmix64 finalizer. All randomness in the project flows through this
// mixer so results are identical across platforms and standard libraries.
constexpr uint64_t splitmix64_mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic 64-bit stream. Does not use <random> distributions, whose
// output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64_mix(seed)) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), n >= 1. Multiply-shift keeps bias negligible.
  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller. Uses two fresh uniforms per call so the
  // stream position does not depend on call history.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  uint64_t state_;
};

// Independent stream for item `index` under `seed`. Mixing the seed before
// xoring keeps nearby (seed, index) pairs decorrelated.
inline Rng substream(uint64_t seed, uint64_t index) {
  return Rng(splitmix64_mix(seed) ^ splitmix64_mix(index ^ 0x5851f42d4c957f2dULL));
}

}  // namespace sodkit
