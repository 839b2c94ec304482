#include "rmgd/rng.hpp"

#include <cmath>
#include <numbers>

namespace rmgd {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
__extension__ using Uint128 = unsigned __int128;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  std::uint64_t h = mix64(seed + kGoldenGamma);
  h = mix64(h ^ (stream * kGoldenGamma + 0x632BE59BD9B4E019ULL));
  return mix64(h ^ (index * 0xD1B54A32D192ED03ULL + kGoldenGamma));
}

std::uint64_t CounterRng::next() noexcept {
  ++counter_;
  return mix64(seed_ + counter_ * kGoldenGamma);
}

double CounterRng::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  // Multiply-high reduction; bias is at most n / 2^64.
  const auto wide = static_cast<Uint128>(next()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

double CounterRng::normal() noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rmgd
