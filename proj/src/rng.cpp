#include "rfpca/rng.hpp"

#include <cmath>

namespace rfpca {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

double Rng::gaussian() {
  // u1 in (0, 1] so the log is finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::cauchy(double scale) {
  const double u = uniform_open();
  return scale * std::tan(3.141592653589793238462643383279 * (u - 0.5));
}

double Rng::laplace(double scale) {
  const double u = uniform_open();
  return u < 0.5 ? scale * std::log(2.0 * u) : -scale * std::log(2.0 * (1.0 - u));
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  // Rejection sampling to stay unbiased: 2^64 mod n values are discarded.
  const std::uint64_t threshold = (~n + 1) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

}  // namespace rfpca
