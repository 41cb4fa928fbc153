#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace t3s {

/// One step of the splitmix64 mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a, used to turn stream names into integers.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for a named sub-stream of an experiment seed. Every consumer of
/// randomness (parameter init, batch order, mixup, ...) draws from its own
/// stream so toggling one feature never shifts another's draws.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ fnv1a(stream)) + index);
}

using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0, 1) on a 2^-53 lattice, so that
/// 1 - u is exact.
inline double uniform_open(Rng& rng) {
  for (;;) {
    const std::uint64_t k = rng() >> 11;
    if (k != 0) return static_cast<double>(k) * 0x1.0p-53;
  }
}

/// Standard normal via Box-Muller on uniform_open (portable across
/// standard library implementations, unlike std::normal_distribution).
inline double standard_normal(Rng& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform_open(rng) * static_cast<double>(n)) % n;
}

}  // namespace t3s
