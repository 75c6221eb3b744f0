#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "liflab/dataset.hpp"
#include "liflab/network.hpp"
#include "liflab/training.hpp"

namespace liflab {

struct TrainConfig {
  int epochs = 150;
  int batch_size = 500;
  double learning_rate = 1e-2;
  int lr_step_size = 50;
  double lr_gamma = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double max_grad_norm = 0.0;  // 0 disables clipping
  int micro_batch = 0;         // 0 = whole mini-batch per forward pass
  bool evaluate_each_epoch = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0;
  double loss = 0;
  double train_accuracy = 0;
  double test_accuracy = 0;                 // NaN when no test set
  std::vector<double> firing_rates;         // per layer, training forward passes
  double seconds = 0;                       // wall clock; excluded from deterministic outputs
};

struct TrainReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  double initial_loss = 0;  // mean training loss of the initialized net
  std::vector<EpochRecord> epochs;

  double final_test_accuracy() const;
};

struct EvalResult {
  double accuracy = 0;
  double loss = 0;
  std::vector<int> predictions;
  std::vector<double> firing_rates;  // per layer
};

// Forward-only pass in chunks of `chunk` samples. steps = 0 uses the
// dataset's longest sample.
EvalResult evaluate(const Network<double>& net, const Dataset& data, int chunk = 256, int steps = 0);

// Mini-batch Adam + StepLR. Epoch e shuffles with child_seed(seed, e); the
// gradient of a mini-batch is accumulated micro-batch by micro-batch in index
// order, so results are bit-stable for a fixed seed.
std::pair<Network<double>, TrainReport> train_run(Network<double> net, const TrainConfig& cfg,
                                                  const Dataset& train, const Dataset* test = nullptr);

}  // namespace liflab
