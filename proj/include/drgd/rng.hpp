// SPDX-License-Identifier: Apache-2.0
//
// Seeded random number generation with a fixed draw discipline.
//
// std::mt19937_64 produces a standard-mandated bit sequence, but the
// distribution adaptors (<random> uniform_real/normal) are implementation
// defined. Everything downstream needs bitwise-reproducible runs, so the
// value construction is done here by hand: uniforms from the top 53 bits,
// gaussians by Box-Muller (always two uniforms per draw, no cached spare),
// bounded integers by rejection.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace drgd {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double gaussian() {
    const double u = 1.0 - uniform();  // (0, 1], keeps log finite
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
  }

  // Unbiased integer in [0, n); rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace drgd
