#pragma once

#include <cstdint>
#include <random>

namespace pgland {

// Seed for the substream identified by (seed, index). Monte Carlo code draws
// path `i` from `Rng(substream_seed(seed, i))`, so results do not depend on
// how paths are scheduled across threads.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

// mt19937_64 with platform-independent conversions to doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Index drawn from a discrete distribution given by `probs` (need not be
  // normalized exactly; the last index absorbs rounding).
  template <typename Probs>
  int categorical(const Probs& probs, int n) {
    double u = uniform();
    for (int i = 0; i + 1 < n; ++i) {
      u -= probs[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  }
  // Number of failures before the first success, success probability p.
  long geometric(double p);
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pgland
