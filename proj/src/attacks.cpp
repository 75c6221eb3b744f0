#include "liflab/attacks.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "liflab/seed.hpp"
#include "liflab/training.hpp"

namespace liflab {

void AttackConfig::validate() const {
  std::vector<std::string> problems;
  if (max_iterations < 0) problems.push_back("max_iterations must be >= 0");
  if (flips_per_iteration < 1) problems.push_back("flips_per_iteration must be >= 1");
  if (problems.empty()) return;
  std::string msg = "invalid attack config:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

namespace {

int predict_one(const Network<double>& net, const SpikeTensor& x, ForwardResult<double>* keep = nullptr) {
  auto fwd = forward_sequence(net, x);
  const int pred = predict_classes<double>(readout_logits(fwd.tape, net.spec.readout)).front();
  if (keep) *keep = std::move(fwd);
  return pred;
}

}  // namespace

AttackResult gradient_spike_attack(const Network<double>& net, const SpikeTensor& sample, int label,
                                   const AttackConfig& cfg) {
  cfg.validate();
  if (sample.batch() != 1) throw DimensionError("gradient_spike_attack: expects a single sample (batch 1)");
  if (!sample.is_binary()) throw std::invalid_argument("gradient_spike_attack: input spikes must be binary");
  const int steps = sample.steps();
  const int width = sample.neurons();
  const std::size_t cells = static_cast<std::size_t>(steps) * static_cast<std::size_t>(width);

  // Tie-break rank per cell, index = t * width + i.
  std::vector<std::uint32_t> rank(cells);
  std::iota(rank.begin(), rank.end(), 0u);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(rank.begin(), rank.end(), rng);

  AttackResult r;
  r.adversarial = sample;
  std::vector<char> flipped(cells, 0);
  std::vector<std::size_t> candidates;
  std::vector<double> benefit(cells);
  const std::vector<int> labels{label};
  const long budget = cfg.unbounded ? static_cast<long>((cells + static_cast<std::size_t>(cfg.flips_per_iteration) - 1) /
                                                        static_cast<std::size_t>(cfg.flips_per_iteration))
                                    : cfg.max_iterations;

  ForwardResult<double> fwd;
  int pred = predict_one(net, r.adversarial, &fwd);
  r.original_prediction = pred;
  while (true) {
    if (pred != label) {
      r.success = true;
      break;
    }
    if (r.iterations >= budget || static_cast<std::size_t>(r.flips) >= cells) break;

    const auto logits = readout_logits(fwd.tape, net.spec.readout);
    const auto loss = softmax_cross_entropy<double>(logits, labels);
    const auto grads = bptt_gradients(fwd.tape, net, loss.dlogits, BpttOptions{.input_gradient = true});

    candidates.clear();
    for (int t = 0; t < steps; ++t) {
      for (int i = 0; i < width; ++i) {
        const std::size_t c = static_cast<std::size_t>(t) * static_cast<std::size_t>(width) + static_cast<std::size_t>(i);
        if (flipped[c]) continue;
        benefit[c] = grads.input[t](i, 0) * (1.0 - 2.0 * r.adversarial[t](i, 0));
        candidates.push_back(c);
      }
    }
    const std::size_t take = std::min(candidates.size(), static_cast<std::size_t>(cfg.flips_per_iteration));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (benefit[a] != benefit[b]) return benefit[a] > benefit[b];
                        return rank[a] < rank[b];
                      });
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t c = candidates[k];
      const int t = static_cast<int>(c / static_cast<std::size_t>(width));
      const int i = static_cast<int>(c % static_cast<std::size_t>(width));
      r.adversarial[t](i, 0) = 1.0 - r.adversarial[t](i, 0);
      flipped[c] = 1;
      ++r.flips;
    }
    ++r.iterations;
    pred = predict_one(net, r.adversarial, &fwd);
  }
  r.final_prediction = pred;
  return r;
}

AttackReport attack_evaluate(const Network<double>& net, const Dataset& data, const AttackConfig& cfg,
                             std::size_t limit) {
  cfg.validate();
  const std::size_t n = limit ? std::min(limit, data.size()) : data.size();
  const int steps = data.max_steps();
  AttackReport rep;
  double flip_sum = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t idx[1] = {s};
    const auto x = data.batch(idx, steps);
    const int label = data.samples[s].label;
    AttackConfig c = cfg;
    c.seed = child_seed(cfg.seed, s);
    const auto res = gradient_spike_attack(net, x, label, c);
    AttackRecord rec;
    rec.sample = s;
    rec.label = label;
    rec.initially_correct = res.original_prediction == label;
    rec.flips = res.flips;
    rec.iterations = res.iterations;
    rec.success = res.success;
    rep.records.push_back(rec);
    ++rep.attempted;
    if (res.success) {
      ++rep.successes;
      flip_sum += res.flips;
    }
  }
  rep.success_rate = rep.attempted ? static_cast<double>(rep.successes) / static_cast<double>(rep.attempted) : 0.0;
  rep.mean_perturbation = rep.successes ? flip_sum / static_cast<double>(rep.successes) : 0.0;
  return rep;
}

std::string AttackReport::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["attempted"] = attempted;
  j["successes"] = successes;
  j["success_rate"] = success_rate;
  j["mean_perturbation"] = mean_perturbation;
  auto& arr = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    arr.push_back({{"sample", r.sample},
                   {"label", r.label},
                   {"initially_correct", r.initially_correct},
                   {"flips", r.flips},
                   {"iterations", r.iterations},
                   {"success", r.success}});
  }
  return j.dump(indent);
}

void AttackReport::write_csv(std::ostream& out) const {
  out << "sample,flips,iterations,success\n";
  for (const auto& r : records) out << r.sample << ',' << r.flips << ',' << r.iterations << ',' << (r.success ? 1 : 0) << '\n';
}

namespace {

void check_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("event_drop: rho must lie in [0, 1]");
}

}  // namespace

SpikeTensor event_drop(const SpikeTensor& frames, double rho, std::uint64_t seed) {
  check_rho(rho);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SpikeTensor out = frames;
  for (int t = 0; t < frames.steps(); ++t) {
    auto& f = out[t];
    for (Eigen::Index b = 0; b < f.cols(); ++b) {
      for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double v = f(i, b);
        if (v <= 0) continue;
        double kept = 0;
        const auto count = static_cast<long>(v);
        for (long k = 0; k < count; ++k)
          if (u(rng) >= rho) kept += 1;
        f(i, b) = kept;
      }
    }
  }
  return out;
}

SparseFrames event_drop(const SparseFrames& frames, double rho, std::uint64_t seed) {
  check_rho(rho);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SparseFrames out;
  out.width = frames.width;
  out.active.resize(frames.active.size());
  for (std::size_t t = 0; t < frames.active.size(); ++t)
    for (auto i : frames.active[t])
      if (u(rng) >= rho) out.active[t].push_back(i);
  return out;
}

EventStream event_drop(const EventStream& stream, double rho, std::uint64_t seed) {
  check_rho(rho);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EventStream out;
  out.width = stream.width;
  out.height = stream.height;
  for (const auto& e : stream.events)
    if (u(rng) >= rho) out.events.push_back(e);
  return out;
}

Dataset event_drop(const Dataset& data, double rho, std::uint64_t seed) {
  check_rho(rho);
  Dataset out;
  out.width = data.width;
  out.num_classes = data.num_classes;
  out.samples.reserve(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto* f = std::get_if<SparseFrames>(&data.samples[n].input);
    if (!f) throw ConfigError("event_drop: sample " + std::to_string(n) + " is not a spike-frame sample");
    out.samples.push_back(Sample{event_drop(*f, rho, child_seed(seed, n)), data.samples[n].label});
  }
  return out;
}

}  // namespace liflab
