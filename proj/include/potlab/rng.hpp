#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>

namespace potlab {

// Counter-based generator: output k is a pure function of (seed, k), so
// identical seeds give identical streams and a copied Rng advances
// independently of the original. The mixing function is splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * ++counter_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. Two uniforms per draw, no cached spare:
  // the draw count is then a fixed function of the call count, which keeps
  // streams reproducible across refactors.
  double normal() {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Categorical draw from nonnegative weights summing to ~1.
  std::size_t categorical(std::span<const double> weights) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  // Child stream with an independent seed; used to hand each parallel task
  // its own generator.
  Rng split() { return Rng(next_u64()); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace potlab
