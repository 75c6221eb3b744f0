#include "liflab/xor_task.hpp"

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "liflab/seed.hpp"

namespace liflab {

void XorTaskConfig::validate() const {
  std::vector<std::string> problems;
  if (n_input < 1) problems.push_back("n_input must be >= 1");
  if (cue_duration < 1) problems.push_back("cue_duration must be >= 1");
  if (delay_duration < 1) problems.push_back("delay_duration must be >= 1");
  if (!(low_rate >= 0.0 && low_rate < high_rate && high_rate <= 1.0))
    problems.push_back("rates must satisfy 0 <= low_rate < high_rate <= 1");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) problems.push_back("noise_rate must lie in [0, 1]");
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << "invalid xor task config:";
  for (const auto& p : problems) msg << "\n  " << p;
  throw ConfigError(msg.str());
}

XorTrial generate_xor_trial(const XorTaskConfig& cfg, std::array<int, 2> bits, std::uint64_t seed) {
  cfg.validate();
  if ((bits[0] != 0 && bits[0] != 1) || (bits[1] != 0 && bits[1] != 1))
    throw ConfigError("xor trial bits must be 0 or 1");
  XorTrial trial;
  trial.bits = bits;
  trial.label = bits[0] ^ bits[1];
  trial.spikes = Matrix::Zero(cfg.total_steps(), cfg.n_input);

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto rate_at = [&](int t) {
    if (t < cfg.cue_duration) return bits[0] ? cfg.high_rate : cfg.low_rate;
    if (t < cfg.second_cue_begin()) return cfg.noise_rate;
    return bits[1] ? cfg.high_rate : cfg.low_rate;
  };
  for (int t = 0; t < cfg.total_steps(); ++t) {
    const double p = rate_at(t);
    for (int i = 0; i < cfg.n_input; ++i) trial.spikes(t, i) = unif(gen) < p ? 1.0 : 0.0;
  }
  return trial;
}

Dataset generate_xor_dataset(const XorTaskConfig& cfg, int n_trials, std::uint64_t seed) {
  cfg.validate();
  if (n_trials <= 0 || n_trials % 4 != 0)
    throw ConfigError("xor dataset: n_trials must be a positive multiple of 4, got " + std::to_string(n_trials));
  static constexpr std::array<std::array<int, 2>, 4> kPairs{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
  Dataset ds;
  ds.width = cfg.n_input;
  ds.num_classes = 2;
  ds.samples.reserve(static_cast<std::size_t>(n_trials));
  for (int i = 0; i < n_trials; ++i) {
    const auto trial = generate_xor_trial(cfg, kPairs[static_cast<std::size_t>(i % 4)],
                                          child_seed(seed, static_cast<std::uint64_t>(i)));
    ds.samples.push_back(Sample{SparseFrames::from_dense(trial.spikes), trial.label});
  }
  return ds;
}

}  // namespace liflab
