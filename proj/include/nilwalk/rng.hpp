#pragma once

#include <cstdint>
#include <random>

namespace nilwalk {

/// SplitMix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream with the given index under a master seed. Streams are
/// keyed by shard index, never by worker, so results do not depend on how
/// many threads consume them.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

using engine = std::mt19937_64;

inline engine make_stream(std::uint64_t master, std::uint64_t index) {
  return engine(stream_seed(master, index));
}

/// Fixed shard size for sample-parallel Monte Carlo.
inline constexpr std::uint64_t k_shard_samples = 1 << 14;

}  // namespace nilwalk
