#pragma once

#include <cstdint>
#include <random>

namespace capclust {

// splitmix64 finalizer; used to derive independent substreams from
// (seed, stream) so parallel schedules stay reproducible.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix64(mix64(seed) ^ mix64(stream + 0x243f6a8885a308d3ULL)));
}

}  // namespace capclust
