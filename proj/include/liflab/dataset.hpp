#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "liflab/types.hpp"

namespace liflab {

// Spike frames as lists of active cell indices per step. An index repeated k
// times in one step encodes a count of k (count-valued frames).
struct SparseFrames {
  int width = 0;
  std::vector<std::vector<std::int32_t>> active;

  int steps() const { return static_cast<int>(active.size()); }
  std::size_t total_active() const;

  // steps x width, 0/1 (or counts)
  Matrix to_dense() const;
  static SparseFrames from_dense(const Matrix& frames);

  bool operator==(const SparseFrames&) const = default;
};

// A real-valued vector injected as the same input current at every step.
struct StaticCurrent {
  Vector intensity;
  int steps = 1;
};

struct Sample {
  std::variant<SparseFrames, StaticCurrent> input;
  int label = 0;

  int steps() const;
  int width() const;
};

struct Dataset {
  int width = 0;
  int num_classes = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  int max_steps() const;

  // Dense (steps x width x batch) tensor for the given sample indices. Shorter
  // samples are zero-padded to `steps` (default: max_steps()); longer ones are
  // truncated.
  Sequence<double> batch(std::span<const std::size_t> indices, int steps = 0) const;
  std::vector<int> labels(std::span<const std::size_t> indices) const;

  // Throws DimensionError if any sample's width or label is inconsistent.
  void validate() const;
};

std::vector<std::size_t> iota_indices(std::size_t n);

}  // namespace liflab
