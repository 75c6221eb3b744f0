#include "doctest.h"

#include <cmath>
#include <random>

#include "../support/gradient_oracle.hpp"
#include "liflab/trainer.hpp"
#include "liflab/xor_task.hpp"

using namespace liflab;

TEST_CASE("softmax cross-entropy against a direct formula") {
  Matrix logits(3, 2);
  logits << 1.0, -2.0, 0.5, 0.0, -1.0, 3.0;
  const std::vector<int> labels{0, 2};
  const auto r = softmax_cross_entropy<double>(logits, labels);
  double expect = 0;
  for (int b = 0; b < 2; ++b) {
    double z = 0;
    for (int k = 0; k < 3; ++k) z += std::exp(logits(k, b));
    expect += -std::log(std::exp(logits(labels[b], b)) / z) / 2;
  }
  CHECK(r.loss == doctest::Approx(expect).epsilon(1e-14));
  // Central differences of the loss w.r.t. each logit.
  for (int k = 0; k < 3; ++k)
    for (int b = 0; b < 2; ++b) {
      Matrix lp = logits, lm = logits;
      lp(k, b) += 1e-6;
      lm(k, b) -= 1e-6;
      const double fd = (softmax_cross_entropy<double>(lp, labels).loss - softmax_cross_entropy<double>(lm, labels).loss) / 2e-6;
      CHECK(r.dlogits(k, b) == doctest::Approx(fd).epsilon(1e-7));
    }
  CHECK_THROWS_AS(softmax_cross_entropy<double>(logits, std::vector<int>{0}), DimensionError);
  CHECK_THROWS_AS(softmax_cross_entropy<double>(logits, std::vector<int>{0, 3}), DimensionError);
}

TEST_CASE("zero loss gradient gives zero parameter gradients") {
  const auto p = oracle::random_tiny_problem(5, Variant::recurrent);
  const auto fwd = forward_sequence(p.net, p.input);
  const Matrix zero = Matrix::Zero(p.net.spec.output_width(), p.input.batch());
  const auto g = bptt_gradients(fwd.tape, p.net, zero, BpttOptions{.input_gradient = true});
  for (const auto& m : g.params) CHECK(m.isZero());
  for (const auto& f : g.input.frames) CHECK(f.isZero());
}

TEST_CASE("single neuron, single step chain rule") {
  NetworkSpec s;
  s.input_width = 1;
  s.layers = {{1, false}};
  s.neuron = {0.3, true, 0.5, 0.5};
  auto net = init_network(s, 0);
  net.layers[0].feedforward(0, 0) = 0.7;
  Sequence<double> x(1, 1, 1);
  x[0](0, 0) = 0.9;
  const auto fwd = forward_sequence(net, x);
  const double u = 0.63;
  CHECK(fwd.tape.layers[0].potential[0](0, 0) == doctest::Approx(u));
  const Matrix dl = Matrix::Constant(1, 1, 2.5);
  const auto g = bptt_gradients(fwd.tape, net, dl);
  CHECK(g.params[0](0, 0) == doctest::Approx(2.5 * surrogate_pseudo_derivative(u, s.neuron) * 0.9));
}

TEST_CASE("BPTT matches finite differences of the smoothed network") {
  const Variant variants[] = {Variant::baseline, Variant::no_leak, Variant::complete_leak, Variant::no_reset,
                              Variant::recurrent};
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    for (auto v : variants) {
      const auto p = oracle::smooth_tiny_problem(seed, v);
      const auto gc = oracle::check_problem(p);
      CHECK(gc.checked > 0);
      worst = std::max(worst, gc.max_rel_error);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("2-4-2 network, three steps") {
  NetworkSpec s;
  s.input_width = 2;
  s.layers = {{4, false}, {2, false}};
  s.neuron = {0.3, true, 0.5, 0.5};
  for (std::uint64_t seed = 0;; ++seed) {
    oracle::TinyProblem p;
    p.net = init_network(s, seed);
    for (auto* m : p.net.parameters()) *m *= 2.0;
    p.input = Sequence<double>(3, 2, 2);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(0, 1);
    for (auto& f : p.input.frames)
      for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = d(rng);
    p.labels = {0, 1};
    if (oracle::smoothed_loss(p.net, p.input, p.labels).closest_kink < 1e-3) continue;
    CHECK(oracle::check_problem(p).max_rel_error < 1e-4);
    break;
  }
}

TEST_CASE("no potential gradient after the readout window") {
  auto p = oracle::random_tiny_problem(17, Variant::recurrent);
  p.net.spec.readout = {ReadoutMode::rate, 0, 1};
  p.input = Sequence<double>(5, p.net.spec.input_width, 2);
  for (auto& f : p.input.frames) f.setConstant(1.0);
  p.labels = {0, 1};
  const auto fwd = forward_sequence(p.net, p.input);
  const auto lr = softmax_cross_entropy<double>(readout_logits(fwd.tape, p.net.spec.readout), p.labels);
  const auto g = bptt_gradients(fwd.tape, p.net, lr.dlogits, BpttOptions{.keep_state_gradients = true});
  for (const auto& layer : g.potential)
    for (int t = 1; t < 5; ++t) CHECK(layer[t].isZero());
}

TEST_CASE("complete leak severs the temporal credit path") {
  NetworkSpec s;
  s.input_width = 3;
  s.layers = {{4, false}, {2, false}};
  s.neuron = {0.0, true, 0.5, 0.5};
  auto net = init_network(s, 4);
  for (auto* m : net.parameters()) *m *= 2.0;
  Sequence<double> x(4, 3, 1);
  for (auto& f : x.frames) f.setConstant(0.6);
  const auto fwd = forward_sequence(net, x);
  const Matrix dl = (Matrix(2, 1) << 1.0, -1.0).finished();
  const auto g = bptt_gradients(fwd.tape, net, dl, BpttOptions{.keep_state_gradients = true});
  // dL/du(t) reduces to dL/do(t) g(u(t)) exactly.
  for (std::size_t n = 0; n < 2; ++n)
    for (int t = 0; t < 4; ++t) {
      const Matrix local =
          g.spikes[n][t].cwiseProduct(surrogate_pseudo_derivative(fwd.tape.layers[n].potential[t], s.neuron));
      CHECK(g.potential[n][t] == local);
    }
}

TEST_CASE("bptt rejects a mismatched tape") {
  const auto p = oracle::random_tiny_problem(3, Variant::baseline);
  const auto fwd = forward_sequence(p.net, p.input);
  const auto other = oracle::random_tiny_problem(4, Variant::recurrent);
  const Matrix dl = Matrix::Zero(p.net.spec.output_width(), p.input.batch());
  if (other.net.spec.layers != p.net.spec.layers)
    CHECK_THROWS_AS(bptt_gradients(fwd.tape, other.net, dl), DimensionError);
  CHECK_THROWS_AS(bptt_gradients(fwd.tape, p.net, Matrix(Matrix::Zero(1, 7))), DimensionError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Matrix w = Matrix::Constant(2, 2, 0.4);
  OptimizerState<double> st;
  st.hyper.learning_rate = 0.1;
  adam_step<double>({&w}, {Matrix::Zero(2, 2)}, st);
  CHECK(w == Matrix::Constant(2, 2, 0.4));
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step moves by lr against the gradient sign") {
  for (double g : {3.0, -0.002, 1e4}) {
    Matrix w = Matrix::Constant(1, 1, 1.0);
    OptimizerState<double> st;
    st.hyper.learning_rate = 0.01;
    adam_step<double>({&w}, {Matrix::Constant(1, 1, g)}, st);
    CHECK(w(0, 0) - 1.0 == doctest::Approx(-0.01 * (g > 0 ? 1 : -1)).epsilon(1e-5));
  }
}

TEST_CASE("adam: scripted scalar recurrence") {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double grads[3] = {0.5, -1.5, 0.25};
  // Hand recurrence.
  double x = 2.0, m = 0, v = 0;
  double expect[3];
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
    expect[t - 1] = x;
  }
  Matrix w = Matrix::Constant(1, 1, 2.0);
  OptimizerState<double> st;
  st.hyper = {lr, b1, b2, eps};
  for (int t = 0; t < 3; ++t) {
    adam_step<double>({&w}, {Matrix::Constant(1, 1, grads[t])}, st);
    CHECK(w(0, 0) == doctest::Approx(expect[t]).epsilon(1e-12));
  }
  CHECK(st.step == 3);
  CHECK_THROWS_AS(adam_step<double>({&w}, {Matrix::Zero(2, 1)}, st), DimensionError);
}

TEST_CASE("step_lr schedule") {
  CHECK(step_lr(1e-4, 0, 25, 0.1) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(step_lr(1e-4, 24, 25, 0.1) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(step_lr(1e-4, 25, 25, 0.1) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(step_lr(1e-2, 120, 50, 0.1) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK_THROWS_AS(step_lr(1e-2, -1, 50, 0.1), ConfigError);
  CHECK_THROWS_AS(step_lr(1e-2, 3, 0, 0.1), ConfigError);
}

TEST_CASE("clip_grad_norm rescales to the bound") {
  std::vector<Matrix> g{Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 4.0)};
  CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0](0, 0) == doctest::Approx(0.6));
  CHECK(g[1](0, 0) == doctest::Approx(0.8));
  std::vector<Matrix> small{Matrix::Constant(1, 1, 0.1)};
  clip_grad_norm(small, 1.0);
  CHECK(small[0](0, 0) == 0.1);
}

namespace {

// Two classes of static currents: class 1 drives input 0, class 0 input 1.
Dataset toy_dataset(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 0.2);
  Dataset d;
  d.width = 2;
  d.num_classes = 2;
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    Vector v(2);
    v << (y ? 0.8 : 0.1) + jitter(rng), (y ? 0.1 : 0.8) + jitter(rng);
    d.samples.push_back({StaticCurrent{v, 6}, y});
  }
  return d;
}

NetworkSpec toy_spec() {
  NetworkSpec s;
  s.input_width = 2;
  s.layers = {{8, false}, {2, false}};
  s.time_steps = 6;
  return s;
}

}  // namespace

TEST_CASE("train_run with zero epochs returns the initial network") {
  const auto data = toy_dataset(16, 1);
  const auto net = init_network(toy_spec(), 9);
  TrainConfig cfg;
  cfg.epochs = 0;
  auto [out, rep] = train_run(net, cfg, data);
  for (std::size_t k = 0; k < net.parameters().size(); ++k) CHECK(*out.parameters()[k] == *net.parameters()[k]);
  CHECK(rep.epochs.empty());
}

TEST_CASE("train_run is deterministic") {
  const auto data = toy_dataset(40, 2);
  const auto test = toy_dataset(20, 3);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.micro_batch = 3;
  cfg.seed = 77;
  auto [a, ra] = train_run(init_network(toy_spec(), 5), cfg, data, &test);
  auto [b, rb] = train_run(init_network(toy_spec(), 5), cfg, data, &test);
  for (std::size_t k = 0; k < a.parameters().size(); ++k) CHECK(*a.parameters()[k] == *b.parameters()[k]);
  REQUIRE(ra.epochs.size() == 4);
  for (std::size_t e = 0; e < 4; ++e) {
    CHECK(ra.epochs[e].loss == rb.epochs[e].loss);
    CHECK(ra.epochs[e].test_accuracy == rb.epochs[e].test_accuracy);
    CHECK(ra.epochs[e].firing_rates == rb.epochs[e].firing_rates);
  }
  CHECK(ra.initial_loss == rb.initial_loss);
}

TEST_CASE("first epoch lowers the loss on a learnable toy set") {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = toy_dataset(64, seed + 10);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-2;
    cfg.seed = seed;
    cfg.evaluate_each_epoch = false;
    // A potential readout keeps the loss sensitive while the output is silent.
    auto spec = toy_spec();
    spec.readout.mode = ReadoutMode::potential;
    auto net = init_network(spec, seed);
    const double before = evaluate(net, data).loss;
    auto [trained, rep] = train_run(net, cfg, data);
    CHECK(rep.initial_loss == before);
    if (evaluate(trained, data).loss < before) ++improved;
  }
  CHECK(improved >= 3);
}

TEST_CASE("micro-batching only changes rounding") {
  const auto data = toy_dataset(24, 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 12;
  cfg.seed = 3;
  cfg.evaluate_each_epoch = false;
  auto [whole, r1] = train_run(init_network(toy_spec(), 1), cfg, data);
  cfg.micro_batch = 5;
  auto [split, r2] = train_run(init_network(toy_spec(), 1), cfg, data);
  for (std::size_t k = 0; k < whole.parameters().size(); ++k)
    CHECK((*whole.parameters()[k] - *split.parameters()[k]).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("train_run rejects width mismatches and bad configs") {
  const auto data = toy_dataset(8, 1);
  NetworkSpec s = toy_spec();
  s.input_width = 3;
  CHECK_THROWS_AS(train_run(init_network(s, 0), TrainConfig{}, data), DimensionError);
  TrainConfig bad;
  bad.batch_size = 0;
  bad.learning_rate = -1;
  CHECK_THROWS_AS(train_run(init_network(toy_spec(), 0), bad, data), ConfigError);
}
