#pragma once

// Deterministic pseudo-random generation. Everything randomized in this
// library draws from SplitMix64 streams so that results are reproducible
// bit-for-bit from a 64-bit seed, independently of the standard library's
// distribution implementations.

#include <cmath>
#include <cstdint>

namespace echodec {

/// SplitMix64 generator (Steele, Lea & Flood's mixing constants).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via the Marsaglia polar method (rejection keeps the
  /// stream deterministic; no trig calls).
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // Rejection-free modulo is biased for huge n; all uses here have
    // n << 2^32 so a simple scaled draw is exact enough and deterministic.
    return static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Counter-based seed split: derives the seed of stream `counter` from a
/// master seed. Used to give multistart restarts (and scan stages)
/// independent streams whose identity does not depend on scheduling.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t counter) {
  SplitMix64 g(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
  return g.next_u64();
}

}  // namespace echodec
