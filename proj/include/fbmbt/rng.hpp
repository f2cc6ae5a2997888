#pragma once

#include <cstdint>
#include <random>

namespace fbmbt {

using Engine = std::mt19937_64;

/// Disjoint seed domains. Streams for X, the inner walk / Brownian path and
/// the auxiliary Brownian motion W never share a derived seed.
enum class StreamDomain : std::uint64_t {
  kOuterFbm = 0x58,      // 'X'
  kInnerWalk = 0x59,     // 'Y'
  kAuxBrownian = 0x57,   // 'W'
  kSynthetic = 0x53,     // 'S', test / calibration draws
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Identifies one random stream: (master seed, domain, level, replication, sub-stream).
struct StreamKey {
  std::uint64_t master = 0;
  StreamDomain domain = StreamDomain::kOuterFbm;
  std::uint64_t level = 0;
  std::uint64_t replication = 0;
  std::uint64_t substream = 0;

  friend constexpr bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Counter-style seed derivation: a chained splitmix64 hash of every key field.
/// The result depends only on the key, never on scheduling order.
constexpr std::uint64_t derive_seed(const StreamKey& key) noexcept {
  std::uint64_t h = detail::splitmix64(key.master);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(key.domain));
  h = detail::splitmix64(h ^ key.level);
  h = detail::splitmix64(h ^ key.replication);
  h = detail::splitmix64(h ^ key.substream);
  return h;
}

inline Engine make_engine(const StreamKey& key) { return Engine{derive_seed(key)}; }

inline Engine make_engine(std::uint64_t seed) { return Engine{detail::splitmix64(seed)}; }

}  // namespace fbmbt
