#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace psiepi {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace detail

/// Derives an independent generator for the named stream and index from a
/// single user seed. Used for optimizer restarts, noise draws and bootstrap
/// resamples so that one seed reproduces a whole run.
inline Rng substream(std::uint64_t seed, std::string_view name,
                     std::uint64_t index = 0) {
  std::uint64_t s = detail::splitmix64(seed);
  s = detail::splitmix64(s ^ detail::fnv1a(name));
  s = detail::splitmix64(s ^ (index * 0xd1b54a32d192ed03ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s),
                    static_cast<std::uint32_t>(s >> 32)};
  return Rng(seq);
}

/// 64-bit seed for a named substream, for APIs that take a seed rather
/// than a generator.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name,
                                 std::uint64_t index = 0) {
  std::uint64_t s = detail::splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  s = detail::splitmix64(s ^ detail::fnv1a(name));
  return detail::splitmix64(s + index);
}

} // namespace psiepi
