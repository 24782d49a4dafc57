#include "chronocal/rng.hpp"

namespace chronocal {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng substream(std::uint64_t seed, Stream stream, std::uint64_t shard) {
  const std::uint64_t s =
      mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ shard);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(stream)),
                    static_cast<std::uint32_t>(shard)};
  return Rng(seq);
}

}  // namespace chronocal
