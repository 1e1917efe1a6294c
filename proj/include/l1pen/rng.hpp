#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace l1pen::rng {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hash of (seed, stream, counter). Each tuple names one independent draw,
/// so results do not depend on evaluation order.
constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

/// Uniform on the open interval (0, 1).
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
  return (static_cast<double>(key(seed, stream, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal by Box-Muller on two counter-keyed uniforms.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
  const double u1 = uniform(seed, stream, 2 * counter);
  const double u2 = uniform(seed, stream, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Standard logistic by inverse CDF.
inline double logistic(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
  const double u = uniform(seed, stream, counter);
  return std::log(u / (1.0 - u));
}

/// Child seed for a labelled sub-experiment.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return key(seed ^ 0x5851f42d4c957f2dULL, a, b);
}

}  // namespace l1pen::rng
