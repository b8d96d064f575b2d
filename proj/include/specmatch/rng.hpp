#pragma once

#include <cstddef>
#include <cstdint>

namespace specmatch {

/// Counter-based pseudo-random source.
///
/// Draw i (1-based) is SplitMix64's finalizer applied to
/// `seed + i * 0x9E3779B97F4A7C15` (mod 2^64), so the integer stream depends
/// only on the seed and the draw index. Uniform doubles take the top 53 bits.
/// Normals use the Box-Muller pair (cos branch first, sin branch cached).
///
/// Single-owner: do not share one instance across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1).
  double uniform() noexcept;

  /// Standard normal.
  double normal() noexcept;

  /// Uniform integer in [0, n); n must be positive.
  std::size_t below(std::size_t n) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace specmatch
