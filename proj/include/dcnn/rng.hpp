#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace dcnn {

/// splitmix64 step; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// xorshift64* generator (Marsaglia shifts 12/25/27 with Vigna's multiplier).
///
/// This is the single PRNG behind every seeded decision in the toolkit
/// (splits, shuffles, augmentation, weight init), so that runs are
/// reproducible across implementations. Reference sequence for seed 1:
///   next() = 0x47e4ce4b896cdd1d, 0xabcfa6a8e079651d, 0xb9d10d8feb731f57, ...
/// A zero seed is remapped through splitmix64 to avoid the zero fixed point.
class Rng64 {
 public:
  explicit Rng64(std::uint64_t seed) : state_(seed ? seed : splitmix64(0)) {}

  std::uint64_t next() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0,n). Uses plain modulo; the tiny bias is
  /// irrelevant here and the mapping is part of the documented contract.
  std::uint64_t bounded(std::uint64_t n) { return n ? next() % n : 0; }

  /// Standard normal via Box-Muller. Always consumes exactly two uniforms.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();  // log(0) guard, astronomically rare
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Fisher-Yates: for i = n-1 .. 1, swap(a[i], a[bounded(i+1)]).
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      auto j = bounded(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace dcnn
