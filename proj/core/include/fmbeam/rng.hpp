#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace fmbeam {

/// Seeded random stream built on std::mt19937_64.
///
/// The engine's raw 64-bit output is specified by the standard, so every
/// derived quantity below is computed by hand instead of through the
/// implementation-defined std:: distributions. Equal seeds give equal streams
/// on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::size_t below(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent child stream. Depends only on (seed, stream), never on how
  // many values this generator has already produced.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace fmbeam
