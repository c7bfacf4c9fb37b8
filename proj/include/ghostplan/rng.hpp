#pragma once

#include <cstdint>
#include <random>

namespace ghostplan {

/// SplitMix64 finalizer. Bijective on 64-bit words, so distinct inputs give
/// distinct derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Per-run seed used by the Monte Carlo driver: splitmix64(seed XOR run).
constexpr std::uint64_t derive_run_seed(std::uint64_t seed, std::uint64_t run_index) noexcept {
  return splitmix64(seed ^ run_index);
}

/// Identifiers of the independent random streams drawn inside one call.
enum class StreamId : std::uint64_t {
  SpeckleNoise = 1,
  OffsetsA = 2,
  OffsetsB = 3,
  Exposure = 4,
  Translation = 5,
  Poisson = 6,
  RouteRestarts = 7,
};

using Engine = std::mt19937_64;

/// Engine for stream `id` of a call keyed by `seed`. Two different ids never
/// share a state sequence for the same seed.
inline Engine make_stream(std::uint64_t seed, StreamId id) {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(id)));
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(id)};
  return Engine(seq);
}

}  // namespace ghostplan
