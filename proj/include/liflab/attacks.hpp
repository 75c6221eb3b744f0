#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "liflab/dataset.hpp"
#include "liflab/ingest.hpp"
#include "liflab/network.hpp"

namespace liflab {

// Greedy gradient-guided spike flipping. Each iteration runs a forward pass,
// backpropagates the cross-entropy of the true label to the input, and flips
// the `flips_per_iteration` not-yet-flipped cells with the largest benefit
//   g(t, i) * (1 - 2 x(t, i))
// i.e. 0 -> 1 where dL/dx is most positive and 1 -> 0 where it is most
// negative. Exact ties are ordered by a permutation drawn from `seed`.
// A cell is never flipped twice, so the Hamming distance to the original
// always equals the flip count.
struct AttackConfig {
  int max_iterations = 100;   // 0 allowed: only already-misclassified samples succeed
  int flips_per_iteration = 1;
  std::uint64_t seed = 0;
  // attack_evaluate only: ignore max_iterations and keep going until the
  // sample is misclassified or every cell has been flipped.
  bool unbounded = false;

  void validate() const;
};

struct AttackResult {
  SpikeTensor adversarial;  // steps x width x 1
  int flips = 0;
  int iterations = 0;
  bool success = false;
  int original_prediction = -1;
  int final_prediction = -1;
};

// `sample` is a single binary sample (batch 1). Throws DimensionError on shape
// problems and std::invalid_argument on non-binary input.
AttackResult gradient_spike_attack(const Network<double>& net, const SpikeTensor& sample, int label,
                                   const AttackConfig& cfg);

struct AttackRecord {
  std::size_t sample = 0;
  int label = 0;
  bool initially_correct = false;
  int flips = 0;
  int iterations = 0;
  bool success = false;
};

struct AttackReport {
  std::size_t attempted = 0;
  std::size_t successes = 0;
  double success_rate = 0;       // successes / attempted
  double mean_perturbation = 0;  // mean flips over successful attacks
  std::vector<AttackRecord> records;

  std::string to_json(int indent = 2) const;
  void write_csv(std::ostream& out) const;
};

// Attacks every sample of `data` (or the first `limit` when limit > 0).
// Sample n uses seed child_seed(cfg.seed, n).
AttackReport attack_evaluate(const Network<double>& net, const Dataset& data, const AttackConfig& cfg,
                             std::size_t limit = 0);

// EventDrop: every spike is removed independently with probability rho.
// Count-valued cells drop each of their spikes independently. Draws are made
// in step-major, then sample, then neuron order. Throws ConfigError unless
// 0 <= rho <= 1.
SpikeTensor event_drop(const SpikeTensor& frames, double rho, std::uint64_t seed);
SparseFrames event_drop(const SparseFrames& frames, double rho, std::uint64_t seed);
EventStream event_drop(const EventStream& stream, double rho, std::uint64_t seed);
// Per-sample event_drop with seed child_seed(seed, n). Only spike-frame samples.
Dataset event_drop(const Dataset& data, double rho, std::uint64_t seed);

}  // namespace liflab
