#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace compaudit {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because every draw is a pure
// function of the 64-bit state, so seeded runs are reproducible across
// platforms and the swap sequence of a shuffle can be recomputed by hand.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Plain modulo; the bias is ~n/2^64 and irrelevant at the
  // sizes used here, and the rule stays hand-checkable.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

  // Standard normal via the Marsaglia polar method.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Seed for the i-th permutation: the (i+1)-th output of SplitMix64(master),
// in closed form so derivation is O(1) for any index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Fisher-Yates permutation of {0..q-1}: for i = q-1 down to 1,
// j = next() % (i+1), swap(p[i], p[j]).
inline std::vector<std::size_t> random_permutation(std::size_t q, std::uint64_t seed) {
  std::vector<std::size_t> p(q);
  for (std::size_t i = 0; i < q; ++i) p[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = q; i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

}  // namespace compaudit
