#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ulv {

/// Deterministic 64-bit generator (splitmix64). Implemented here rather than
/// via <random> because std distributions are implementation-defined and the
/// runner promises identical streams across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Unbiased uniform integer in [0, bound). bound must be > 0.
  uint64_t below(uint64_t bound) {
    const uint64_t min = (0 - bound) % bound;  // 2^64 mod bound
    uint64_t r;
    do {
      r = next_u64();
    } while (r < min);
    return r % bound;
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Standard normal via Box-Muller (one value per call; pair cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Independent substream for (seed, role). Distinct roles ("forget", "init",
/// "dropout", "tree", ...) never share draws, so adding a consumer cannot
/// perturb the others.
inline Rng derive_stream(uint64_t seed, std::string_view role) {
  uint64_t h = fnv1a64(role);
  // one splitmix scramble so adjacent seeds do not give adjacent states
  uint64_t z = (seed ^ h) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return Rng(z ^ (z >> 31));
}

inline uint64_t derive_u64(uint64_t seed, std::string_view role) {
  return derive_stream(seed, role).next_u64();
}

}  // namespace ulv
