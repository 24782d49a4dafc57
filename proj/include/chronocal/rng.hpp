#pragma once

#include <cstdint>
#include <random>

namespace chronocal {

using Rng = std::mt19937_64;

/// Named substreams, so each simulation stage draws from its own generator
/// and adding draws in one stage never shifts another.
enum class Stream : std::uint64_t {
  pairs = 1,
  arrival_shape = 2,
  reference = 3,
  reference_dark = 4,
  imager = 5,
  imager_dark = 6,
  drift_mismatch = 7,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Generator seeded from (seed, stream, shard); identical inputs give
/// identical sequences independent of thread scheduling.
Rng substream(std::uint64_t seed, Stream stream, std::uint64_t shard = 0);

}  // namespace chronocal
