#pragma once

#include <cstdint>
#include <random>

namespace osmc {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to spread structured seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic per-repetition seed, independent of execution order, so
// parallel and serial schedules draw identical streams.
inline std::uint64_t substream_seed(std::uint64_t base_seed, std::uint64_t stream) {
  return mix_seed(base_seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace osmc
