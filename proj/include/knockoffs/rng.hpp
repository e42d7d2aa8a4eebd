#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace knockoffs {

// splitmix64 finalizer, used only for key derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for (seed, path...). Replicate r of a run gets its own stream
// keyed by (seed, purpose, r), so results do not depend on thread count or
// execution order.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t v : path) h = splitmix64(h ^ v);
  return h;
}

inline std::mt19937_64 make_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(seed, path));
}

// Stream purposes. Distinct constants keep sub-streams of one replicate from
// colliding.
namespace stream {
inline constexpr std::uint64_t kDesign = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kKnockoff = 3;
inline constexpr std::uint64_t kPermutation = 4;
inline constexpr std::uint64_t kCoin = 5;
inline constexpr std::uint64_t kUnlabeled = 6;
inline constexpr std::uint64_t kPerturb = 7;
inline constexpr std::uint64_t kSideP = 8;
inline constexpr std::uint64_t kSideQ = 9;
}  // namespace stream

}  // namespace knockoffs
