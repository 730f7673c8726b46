#pragma once

#include <cmath>
#include <cstdint>

namespace digs {

/// Counter-style SplitMix64 generator. All randomness in the library flows
/// through this type so that seeded runs reproduce bit-identically regardless
/// of platform or standard-library version.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. No cached spare, so the draw count per
  /// call is fixed and replay is exact.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Unbiased uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (~n + 1) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t state_;
};

/// Derives the seed of sweep child run (cell, repeat) from the base seed.
/// Documented recipe: three chained SplitMix64 scrambles, each xor-folding in
/// one coordinate. Cells and repeats are 0-based.
inline std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t cell, std::uint64_t repeat) {
  SplitMix64 g(base_seed);
  std::uint64_t s = g.next() ^ ((cell + 1) * 0xff51afd7ed558ccdULL);
  SplitMix64 h(s);
  std::uint64_t t = h.next() ^ ((repeat + 1) * 0xc4ceb9fe1a85ec53ULL);
  return SplitMix64(t).next();
}

}  // namespace digs
