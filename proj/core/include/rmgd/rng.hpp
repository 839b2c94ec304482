#pragma once

#include <cstddef>
#include <cstdint>

namespace rmgd {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014). Bijective on 64 bits.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Derives an independent seed for a named stream of a run, e.g. the
/// parameter-initialization stream or the shuffle stream of epoch `index`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) noexcept;

/// Stream identifiers used by the trainer. Fixed so that logs stay
/// reproducible across versions.
namespace streams {
inline constexpr std::uint64_t kParams = 1;
inline constexpr std::uint64_t kBandit = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kData = 4;
inline constexpr std::uint64_t kEnvironment = 5;
}  // namespace streams

/// Counter-based generator: draw i is mix64(seed + (i + 1) * golden_gamma),
/// i.e. SplitMix64 with its state exposed as (seed, counter). The pair fully
/// determines the remaining sequence, so a checkpoint only needs both words.
///
/// All derived variates are computed here rather than through <random>
/// distributions, whose output is implementation-defined.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t next() noexcept;
  std::uint64_t operator()() noexcept { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace rmgd
