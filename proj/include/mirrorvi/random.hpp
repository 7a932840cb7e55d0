#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mirrorvi {

/// Seeded generator with a fixed conversion from raw 64-bit words to
/// variates. std::mt19937_64 is bit-specified by the standard; the
/// std::*_distribution classes are not, so the conversions live here.
///
/// Stream contract (version 1):
///   uniform(): (word >> 11) * 2^-53, one word per draw, in [0, 1)
///   normal():  Box-Muller cosine branch, two uniform() draws per value
class Rng {
 public:
  static constexpr int kStreamVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double scale) { return mean + scale * normal(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mirrorvi
