#include "doctest.h"

#include <cmath>

#include "liflab/seed.hpp"
#include "liflab/xor_task.hpp"

using namespace liflab;

TEST_CASE("xor truth table") {
  const XorTaskConfig cfg;
  CHECK(generate_xor_trial(cfg, {1, 1}, 0).label == 0);
  CHECK(generate_xor_trial(cfg, {1, 0}, 0).label == 1);
  CHECK(generate_xor_trial(cfg, {0, 1}, 0).label == 1);
  CHECK(generate_xor_trial(cfg, {0, 0}, 0).label == 0);
}

TEST_CASE("degenerate rates give deterministic stages") {
  XorTaskConfig cfg;
  cfg.high_rate = 1.0;
  cfg.low_rate = 0.0;
  cfg.noise_rate = 0.0;
  const auto trial = generate_xor_trial(cfg, {1, 0}, 123);
  REQUIRE(trial.spikes.rows() == 60);
  REQUIRE(trial.spikes.cols() == 40);
  CHECK(trial.spikes.topRows(10).isOnes());
  CHECK(trial.spikes.middleRows(10, 40).isZero());
  CHECK(trial.spikes.bottomRows(10).isZero());
}

TEST_CASE("stage spike frequencies match the configured rates") {
  XorTaskConfig cfg;
  cfg.high_rate = 0.8;
  cfg.low_rate = 0.1;
  cfg.noise_rate = 0.05;
  double cue1 = 0, delay = 0, cue2 = 0;
  const int trials = 10000;
  for (int k = 0; k < trials; ++k) {
    const auto t = generate_xor_trial(cfg, {1, 0}, child_seed(99, static_cast<std::uint64_t>(k)));
    cue1 += t.spikes.topRows(10).mean();
    delay += t.spikes.middleRows(10, 40).mean();
    cue2 += t.spikes.bottomRows(10).mean();
  }
  CHECK(std::abs(cue1 / trials - 0.8) <= 0.02);
  CHECK(std::abs(delay / trials - 0.05) <= 0.02);
  CHECK(std::abs(cue2 / trials - 0.1) <= 0.02);
}

TEST_CASE("spikes are binary and generation is seeded") {
  const XorTaskConfig cfg;
  const auto a = generate_xor_trial(cfg, {0, 1}, 5);
  const auto b = generate_xor_trial(cfg, {0, 1}, 5);
  const auto c = generate_xor_trial(cfg, {0, 1}, 6);
  CHECK(a.spikes == b.spikes);
  CHECK(a.spikes != c.spikes);
  CHECK((a.spikes.array() * (1.0 - a.spikes.array())).isZero());
}

TEST_CASE("xor dataset is balanced and deterministic") {
  const XorTaskConfig cfg;
  const auto d8 = generate_xor_dataset(cfg, 8, 1);
  CHECK(d8.size() == 8);
  CHECK(d8.width == 40);
  CHECK(d8.num_classes == 2);
  for (int n : {4, 40, 400}) {
    const auto d = generate_xor_dataset(cfg, n, 3);
    int ones = 0;
    for (const auto& s : d.samples) ones += s.label;
    CHECK(2 * ones == n);
  }
  const auto again = generate_xor_dataset(cfg, 8, 1);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(std::get<SparseFrames>(d8.samples[i].input) == std::get<SparseFrames>(again.samples[i].input));
    CHECK(d8.samples[i].label == again.samples[i].label);
  }
  // Bit pair i mod 4: stage-1 activity separates pairs (0,x) from (1,x).
  XorTaskConfig sharp = cfg;
  sharp.high_rate = 1.0;
  sharp.low_rate = 0.0;
  const auto s = generate_xor_dataset(sharp, 8, 2);
  for (std::size_t i = 0; i < 8; ++i) {
    const Matrix dense = std::get<SparseFrames>(s.samples[i].input).to_dense();
    const int b1 = dense.topRows(10).isOnes() ? 1 : 0;
    const int b2 = dense.bottomRows(10).isOnes() ? 1 : 0;
    CHECK(b1 == static_cast<int>((i % 4) / 2));
    CHECK(b2 == static_cast<int>(i % 2));
    CHECK(s.samples[i].label == (b1 ^ b2));
  }
}

TEST_CASE("stage-3 rate alone cannot solve the task") {
  const XorTaskConfig cfg;
  const auto d = generate_xor_dataset(cfg, 4000, 17);
  // Majority vote of the label given the binarised stage-3 rate.
  const double mid = (cfg.high_rate + cfg.low_rate) / 2;
  int count[2][2] = {{0, 0}, {0, 0}};
  for (const auto& s : d.samples) {
    const Matrix dense = std::get<SparseFrames>(s.input).to_dense();
    const int hi = dense.bottomRows(cfg.cue_duration).mean() > mid ? 1 : 0;
    ++count[hi][s.label];
  }
  int correct = 0;
  for (int hi = 0; hi < 2; ++hi) correct += std::max(count[hi][0], count[hi][1]);
  CHECK(std::abs(static_cast<double>(correct) / d.size() - 0.5) <= 0.03);
}

TEST_CASE("xor config errors") {
  XorTaskConfig bad;
  bad.low_rate = 0.6;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = XorTaskConfig{};
  bad.delay_duration = 0;
  CHECK_THROWS_AS(generate_xor_trial(bad, {0, 0}, 0), ConfigError);
  bad = XorTaskConfig{};
  bad.noise_rate = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(generate_xor_dataset(XorTaskConfig{}, 6, 0), ConfigError);
  CHECK_THROWS_AS(generate_xor_trial(XorTaskConfig{}, {2, 0}, 0), ConfigError);
}
