#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hsreg::rng {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combine a parent key with a child index into a new 64-bit key.
constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t child) noexcept {
  return mix64(parent ^ mix64(child + 0x632be59bd9b4e019ULL));
}

/// Seed for Monte Carlo trial `trial` at sample size `m` under a run seed.
constexpr std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t m, std::uint64_t trial) noexcept {
  return derive(derive(seed, m), trial);
}

/// Counter-based generator: the i-th draw of stream `stream` under `seed`
/// is a pure function of (seed, stream, i). Draws never depend on call order,
/// so parallel workers reproduce the sequential result exactly.
///
///   word(i)    = mix64(derive(seed, stream) + i * 0x9e3779b97f4a7c15)
///   uniform(i) = (word(i) >> 11) * 2^-53                 in [0, 1)
///   normal(i)  = sqrt(-2 log(1 - uniform(2i))) * cos(2 pi uniform(2i+1))
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(derive(seed, stream)) {}

  constexpr std::uint64_t word(std::uint64_t i) const noexcept {
    return mix64(key_ + i * 0x9e3779b97f4a7c15ULL);
  }

  constexpr double uniform(std::uint64_t i) const noexcept {
    return static_cast<double>(word(i) >> 11) * 0x1.0p-53;
  }

  double normal(std::uint64_t i) const noexcept {
    const double u1 = 1.0 - uniform(2 * i);  // (0, 1]
    const double u2 = uniform(2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

/// Stream identifiers used by the library.
inline constexpr std::uint64_t kStreamDesign = 1;
inline constexpr std::uint64_t kStreamNoise = 2;
inline constexpr std::uint64_t kStreamSource = 3;

}  // namespace hsreg::rng
