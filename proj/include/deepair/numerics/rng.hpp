#pragma once

#include <cstdint>
#include <random>

namespace deepair {

// Seeded generator backed by std::mt19937_64, whose output sequence is fixed
// by the C++ standard. The distributions below are implemented here rather
// than taken from <random>, since the standard distributions are not required
// to produce identical draws across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Derive an independent stream, e.g. one per sub-component.
  Rng fork(std::uint64_t salt);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// In-place Fisher-Yates shuffle driven by Rng::below.
template <typename Container>
void shuffle(Container& items, Rng& rng) {
  if (items.size() < 2) return;
  for (std::size_t i = items.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    using std::swap;
    swap(items[i], items[j]);
  }
}

}  // namespace deepair
