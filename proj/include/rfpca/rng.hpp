#pragma once

#include <cstdint>
#include <random>

namespace rfpca {

/// Derives an independent sub-seed from a base seed and a stream label.
/// Different labels give decorrelated generators, so e.g. feature sampling
/// and data shuffling can be reseeded independently (changing the number of
/// features must not perturb the data stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Seedable generator with explicit, portable transformations.
///
/// The engine is std::mt19937_64, whose output sequence is fully specified
/// by the standard; the distribution transforms below are written out by
/// hand (instead of using std::*_distribution, which is implementation
/// defined) so that identical seeds give bit-identical samples on every
/// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1), never returns an endpoint.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (cosine branch only).
  double gaussian();

  /// Zero-centered Cauchy with the given scale.
  double cauchy(double scale);

  /// Zero-centered Laplace with the given scale.
  double laplace(double scale);

  /// Unbiased integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = uniform_index(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rfpca
