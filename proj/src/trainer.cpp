#include "liflab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "liflab/seed.hpp"

namespace liflab {

double step_lr(double base_lr, int epoch, int step_size, double gamma) {
  if (epoch < 0 || step_size < 1) throw ConfigError("step_lr: need epoch >= 0 and step_size >= 1");
  return base_lr * std::pow(gamma, epoch / step_size);
}

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (epochs < 0) problems.push_back("epochs must be >= 0");
  if (batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (!(learning_rate > 0)) problems.push_back("learning_rate must be > 0");
  if (lr_step_size < 1) problems.push_back("lr_step_size must be >= 1");
  if (!(lr_gamma > 0)) problems.push_back("lr_gamma must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) problems.push_back("adam betas must lie in [0, 1)");
  if (!(epsilon > 0)) problems.push_back("epsilon must be > 0");
  if (max_grad_norm < 0) problems.push_back("max_grad_norm must be >= 0");
  if (micro_batch < 0) problems.push_back("micro_batch must be >= 0");
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << "invalid training config:";
  for (const auto& p : problems) msg << "\n  " << p;
  throw ConfigError(msg.str());
}

double TrainReport::final_test_accuracy() const {
  return epochs.empty() ? std::numeric_limits<double>::quiet_NaN() : epochs.back().test_accuracy;
}

namespace {

void check_widths(const Network<double>& net, const Dataset& data) {
  if (data.width != net.layers.front().fan_in())
    throw DimensionError("dataset width " + std::to_string(data.width) + " does not match network input width " +
                         std::to_string(net.layers.front().fan_in()));
  if (data.num_classes > net.layers.back().width())
    throw DimensionError("dataset has " + std::to_string(data.num_classes) + " classes, network outputs " +
                         std::to_string(net.layers.back().width()));
}

void add_firing(std::vector<double>& acc, const Tape<double>& tape) {
  acc.resize(tape.layers.size(), 0.0);
  for (std::size_t n = 0; n < tape.layers.size(); ++n)
    for (const auto& f : tape.layers[n].spikes.frames) acc[n] += f.sum();
}

std::vector<double> normalize_firing(std::vector<double> acc, const Network<double>& net, double steps_x_samples) {
  for (std::size_t n = 0; n < acc.size(); ++n) acc[n] /= steps_x_samples * net.layers[n].width();
  return acc;
}

}  // namespace

EvalResult evaluate(const Network<double>& net, const Dataset& data, int chunk, int steps) {
  check_widths(net, data);
  if (steps <= 0) steps = data.max_steps();
  if (chunk <= 0) chunk = 256;
  EvalResult r;
  std::vector<double> firing(net.layers.size(), 0.0);
  std::size_t correct = 0;
  const auto all = iota_indices(data.size());
  for (std::size_t start = 0; start < all.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t stop = std::min(all.size(), start + static_cast<std::size_t>(chunk));
    std::span<const std::size_t> idx(all.data() + start, stop - start);
    const auto input = data.batch(idx, steps);
    const auto fwd = forward_sequence(net, input);
    const auto logits = readout_logits(fwd.tape, net.spec.readout);
    const auto labels = data.labels(idx);
    const auto loss = softmax_cross_entropy<double>(logits, labels);
    r.loss += loss.loss * static_cast<double>(idx.size());
    const auto pred = predict_classes(logits);
    for (std::size_t b = 0; b < pred.size(); ++b) {
      correct += pred[b] == labels[b];
      r.predictions.push_back(pred[b]);
    }
    add_firing(firing, fwd.tape);
  }
  const double n = static_cast<double>(std::max<std::size_t>(data.size(), 1));
  r.accuracy = static_cast<double>(correct) / n;
  r.loss /= n;
  r.firing_rates = normalize_firing(firing, net, static_cast<double>(steps) * n);
  return r;
}

std::pair<Network<double>, TrainReport> train_run(Network<double> net, const TrainConfig& cfg, const Dataset& train,
                                                  const Dataset* test) {
  cfg.validate();
  net.validate();
  check_widths(net, train);
  if (test) check_widths(net, *test);

  TrainReport report;
  report.seed = cfg.seed;
  if (cfg.epochs == 0 || train.size() == 0) return {std::move(net), std::move(report)};
  report.initial_loss = evaluate(net, train).loss;

  const int steps = net.spec.time_steps > 0 ? net.spec.time_steps : train.max_steps();
  OptimizerState<double> opt;
  opt.hyper = {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
  std::vector<std::size_t> order = iota_indices(train.size());
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const auto micro = cfg.micro_batch > 0 ? static_cast<std::size_t>(cfg.micro_batch) : batch;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    opt.hyper.learning_rate = step_lr(cfg.learning_rate, epoch, cfg.lr_step_size, cfg.lr_gamma);
    std::mt19937_64 shuffle_gen(child_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_gen);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = opt.hyper.learning_rate;
    std::vector<double> firing(net.layers.size(), 0.0);
    std::size_t correct = 0;
    double loss_sum = 0;

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const double batch_n = static_cast<double>(stop - start);
      std::vector<Matrix> grads;
      for (std::size_t ms = start; ms < stop; ms += micro) {
        const std::size_t me = std::min(stop, ms + micro);
        std::span<const std::size_t> idx(order.data() + ms, me - ms);
        const auto input = train.batch(idx, steps);
        const auto labels = train.labels(idx);
        const auto fwd = forward_sequence(net, input);
        const auto logits = readout_logits(fwd.tape, net.spec.readout);
        auto loss = softmax_cross_entropy<double>(logits, labels);
        const double share = static_cast<double>(idx.size()) / batch_n;
        loss.dlogits *= share;
        loss_sum += loss.loss * static_cast<double>(idx.size());
        const auto pred = predict_classes(logits);
        for (std::size_t b = 0; b < pred.size(); ++b) correct += pred[b] == labels[b];
        add_firing(firing, fwd.tape);

        auto g = bptt_gradients(fwd.tape, net, loss.dlogits);
        if (grads.empty()) {
          grads = std::move(g.params);
        } else {
          for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g.params[i];
        }
      }
      if (cfg.max_grad_norm > 0) clip_grad_norm(grads, cfg.max_grad_norm);
      adam_step(net.parameters(), grads, opt);
    }

    const double n = static_cast<double>(train.size());
    rec.loss = loss_sum / n;
    rec.train_accuracy = static_cast<double>(correct) / n;
    rec.firing_rates = normalize_firing(firing, net, static_cast<double>(steps) * n);
    rec.test_accuracy = std::numeric_limits<double>::quiet_NaN();
    if (test && (cfg.evaluate_each_epoch || epoch + 1 == cfg.epochs)) rec.test_accuracy = evaluate(net, *test).accuracy;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.epochs.push_back(std::move(rec));
  }
  return {std::move(net), std::move(report)};
}

}  // namespace liflab
