#include "pgland/random.hpp"

#include <cmath>
#include <numbers>

namespace pgland {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

long Rng::geometric(double p) {
  if (p >= 1.0) return 0;
  // Inversion: floor(log(U) / log(1 - p)) with U in (0, 1].
  const double u = 1.0 - uniform();
  return static_cast<long>(std::floor(std::log(u) / std::log1p(-p)));
}

double Rng::normal() {
  // Box-Muller; one of the pair is discarded to keep the stream stateless.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pgland
