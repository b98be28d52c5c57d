#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace hideseek {

/// Seeded pseudo-random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. All derived draws (uniform reals, bounded integers, normals) are
/// computed here rather than through <random> distributions, which are
/// implementation-defined, so a seed reproduces the same draws everywhere.
/// Instances are not meant to be shared between threads; use fork().
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform on {0, ..., n-1}; n must be positive.
  std::size_t index(std::size_t n);
  bool coin();
  double normal();

  /// Child stream whose seed depends only on this stream's seed and `stream`.
  [[nodiscard]] Rng fork(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hideseek
