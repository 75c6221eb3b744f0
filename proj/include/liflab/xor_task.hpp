#pragma once

#include <array>
#include <cstdint>

#include "liflab/dataset.hpp"

namespace liflab {

// Three-stage delayed spiking XOR: cue 1, noisy delay, cue 2.
struct XorTaskConfig {
  int n_input = 40;
  int cue_duration = 10;
  int delay_duration = 40;
  double high_rate = 0.5;
  double low_rate = 0.05;
  double noise_rate = 0.05;

  int total_steps() const { return 2 * cue_duration + delay_duration; }
  // First step of the second cue.
  int second_cue_begin() const { return cue_duration + delay_duration; }
  void validate() const;

  bool operator==(const XorTaskConfig&) const = default;
};

struct XorTrial {
  Matrix spikes;  // total_steps x n_input, binary
  std::array<int, 2> bits{0, 0};
  int label = 0;  // bits[0] XOR bits[1]
};

// Stage spikes are Bernoulli(high_rate) for a 1 bit, Bernoulli(low_rate) for a
// 0 bit, and Bernoulli(noise_rate) during the delay; drawn step-major from a
// mt19937_64 seeded with `seed`.
XorTrial generate_xor_trial(const XorTaskConfig& cfg, std::array<int, 2> bits, std::uint64_t seed);

// Trial i uses bit pair i mod 4 in the order (0,0), (0,1), (1,0), (1,1) and
// seed child_seed(seed, i). n_trials must be divisible by 4.
Dataset generate_xor_dataset(const XorTaskConfig& cfg, int n_trials, std::uint64_t seed);

}  // namespace liflab
