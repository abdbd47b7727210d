#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace molalign::nn {

// Deterministic RNG wrapper. Raw mt19937_64 output is converted to doubles
// by hand because the std distributions are not bit-identical across
// standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
  }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // modulo bias is irrelevant at desk scale (n << 2^64)
    return engine_() % n;
  }

  // independent stream for a named component, derived from the original seed
  Rng fork(std::uint64_t salt) const {
    return Rng(seed_ * 0x9e3779b97f4a7c15ull + salt * 0xbf58476d1ce4e5b9ull + 1);
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Fisher-Yates over a vector, seeded.
template <typename T> void shuffle(std::vector<T> &items, Rng &rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

} // namespace molalign::nn
