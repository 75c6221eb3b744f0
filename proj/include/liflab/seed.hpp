#pragma once

#include <cstdint>

namespace liflab {

// SplitMix64 finalizer. Stable across versions; all derived seeds go through it.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// child_seed = hash(parent, index). Used for sweep sub-runs, per-epoch
// shuffles, per-trial generation and per-sample attacks.
constexpr std::uint64_t child_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent) ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

}  // namespace liflab
