#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "liflab/checkpoint.hpp"
#include "liflab/dataset.hpp"
#include "liflab/ingest.hpp"
#include "liflab/neuron.hpp"
#include "liflab/trainer.hpp"
#include "liflab/xor_task.hpp"

namespace liflab {

// Flat experiment description. JSON keys equal the field names; see
// schema/config.schema.json. Resolution order: per-dataset defaults, then the
// config file, then LIFLAB_CACHE_DIR (cache_dir only), then command-line flags.
struct ExperimentConfig {
  std::string variant = "baseline";  // baseline | no-leak | complete-leak | no-reset | recurrent | custom
  std::optional<double> leak;        // custom only
  std::optional<bool> reset;         // custom only
  std::optional<bool> recurrent;     // custom only

  std::string dataset = "xor";       // xor | nmnist | mnist | shd-csv | ssc-csv
  std::string data_dir;
  std::vector<int> hidden{64};

  std::string readout = "rate";
  int readout_begin = -1;  // -1: second cue onset for xor, 0 otherwise
  int readout_end = -1;    // -1: last step

  int epochs = 150;
  int batch_size = 500;
  double learning_rate = 1e-2;
  int lr_step_size = 50;
  double lr_gamma = 0.1;
  double threshold = 0.5;
  double surrogate_width = 0.5;
  double max_grad_norm = 0.0;
  int micro_batch = 0;
  double scale = 1.0;  // multiplies epochs and the StepLR period
  bool evaluate_each_epoch = true;

  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  std::string cache_dir;

  double dt_ms = 3.0;       // event datasets
  bool event_counts = false;
  int time_steps = 8;       // mnist constant-current length
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;

  int xor_train = 2000;
  int xor_test = 1000;
  XorTaskConfig xor_task;

  // Throws ConfigError listing every problem.
  void validate() const;
  VariantSettings resolved_variant() const;
  TrainConfig train_config() const;
  // Full network layout for the given data shape.
  NetworkSpec network_spec(int input_width, int num_classes, int steps) const;
  std::filesystem::path resolved_cache_dir() const;
};

// Published topology and hyper-parameters for a dataset.
ExperimentConfig defaults_for(const std::string& dataset);

Json config_to_json(const ExperimentConfig& cfg);
// Applies the keys of `j` on top of `cfg`; unknown keys and type errors are
// appended to `problems`.
void apply_config_json(ExperimentConfig& cfg, const Json& j, std::vector<std::string>& problems);
ExperimentConfig resolve_config(const Json& file, const Json& flags, const char* env_cache_dir = nullptr);

// 16 hex digits of FNV-1a over the resolved config, output/cache paths excluded.
std::string config_hash(const ExperimentConfig& cfg);

struct DataSplits {
  Dataset train;
  Dataset test;
};

// Generates (xor) or loads the configured dataset. Event datasets are cached
// as SNNF files under the cache directory when one is configured.
DataSplits load_data(const ExperimentConfig& cfg);

struct RunResult {
  Network<double> net;
  TrainReport report;
  double test_accuracy = 0;
  std::filesystem::path checkpoint_path;
  std::filesystem::path report_path;
  std::filesystem::path metrics_path;
};

// Sub-seeds: train data child_seed(seed, 1), test data child_seed(seed, 2),
// weights child_seed(seed, 3), shuffling child_seed(seed, 4).
RunResult run(const ExperimentConfig& cfg);
RunResult run(const ExperimentConfig& cfg, const DataSplits& data);

// The artifact stem "<dataset>-<variant>-<hash>-s<seed>".
std::string artifact_stem(const ExperimentConfig& cfg);
std::string metrics_csv(const ExperimentConfig& cfg, const TrainReport& report);

struct LeakSweepRow {
  double leak = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  double test_accuracy = 0;
};

std::vector<double> default_leak_grid();  // 0.0, 0.1, ..., 1.0
// Row i is run() of `base` turned into a custom variant with leak = leaks[i]
// (reset and recurrence kept) and seed child_seed(base.seed, i). Runs execute
// on up to `jobs` threads; rows are returned in list order.
std::vector<LeakSweepRow> sweep_leakage(const ExperimentConfig& base, const std::vector<double>& leaks, int jobs = 1);
ExperimentConfig leak_sweep_config(const ExperimentConfig& base, double leak, std::size_t index);
std::string sweep_csv(const std::vector<LeakSweepRow>& rows);

}  // namespace liflab
