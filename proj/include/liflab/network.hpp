#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "liflab/neuron.hpp"
#include "liflab/types.hpp"

namespace liflab {

struct LayerSpec {
  int width = 0;
  bool recurrent = false;

  bool operator==(const LayerSpec&) const = default;
};

enum class ReadoutMode { rate, potential };

// Logits average the output layer over steps [begin, end); end < 0 means T.
struct ReadoutSpec {
  ReadoutMode mode = ReadoutMode::rate;
  int begin = 0;
  int end = -1;

  // Resolved [begin, end) for a sequence of `steps`; throws if empty.
  std::pair<int, int> window(int steps) const;

  bool operator==(const ReadoutSpec&) const = default;
};

std::string to_string(ReadoutMode m);
ReadoutMode parse_readout_mode(const std::string& s);

// Layer topology, e.g. Input(2312)-FC_LIF(512)-FC_LIF(10). The last layer is
// the readout layer; its width is the class count.
struct NetworkSpec {
  int input_width = 0;
  std::vector<LayerSpec> layers;
  int time_steps = 0;  // 0 accepts any sequence length
  NeuronConfig neuron;
  ReadoutSpec readout;

  void validate() const;
  int output_width() const { return layers.empty() ? 0 : layers.back().width; }
  std::string describe() const;

  bool operator==(const NetworkSpec&) const = default;
};

template <typename Scalar = double>
struct DenseLifLayer {
  MatrixX<Scalar> feedforward;               // out x in
  std::optional<MatrixX<Scalar>> recurrent;  // out x out
  NeuronConfig neuron;

  int width() const { return static_cast<int>(feedforward.rows()); }
  int fan_in() const { return static_cast<int>(feedforward.cols()); }
};

template <typename Scalar = double>
struct Network {
  NetworkSpec spec;
  std::uint64_t seed = 0;
  std::vector<DenseLifLayer<Scalar>> layers;

  // Flat parameter order: W0, [V0], W1, [V1], ...
  std::vector<MatrixX<Scalar>*> parameters() {
    std::vector<MatrixX<Scalar>*> out;
    for (auto& l : layers) {
      out.push_back(&l.feedforward);
      if (l.recurrent) out.push_back(&*l.recurrent);
    }
    return out;
  }
  std::vector<const MatrixX<Scalar>*> parameters() const {
    std::vector<const MatrixX<Scalar>*> out;
    for (const auto& l : layers) {
      out.push_back(&l.feedforward);
      if (l.recurrent) out.push_back(&*l.recurrent);
    }
    return out;
  }

  // Replace the neuron parameters of every layer (e.g. reset off at inference).
  void set_neuron_config(const NeuronConfig& cfg) {
    spec.neuron = cfg;
    for (auto& l : layers) l.neuron = cfg;
  }

  template <typename Other>
  Network<Other> cast() const {
    Network<Other> n;
    n.spec = spec;
    n.seed = seed;
    for (const auto& l : layers) {
      DenseLifLayer<Other> c;
      c.feedforward = l.feedforward.template cast<Other>();
      if (l.recurrent) c.recurrent = l.recurrent->template cast<Other>();
      c.neuron = l.neuron;
      n.layers.push_back(std::move(c));
    }
    return n;
  }

  // Throws on shape mismatch with spec or non-finite weights.
  void validate() const {
    spec.validate();
    if (layers.size() != spec.layers.size()) throw DimensionError("network: layer count differs from spec");
    int fan_in = spec.input_width;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.feedforward.rows() != spec.layers[i].width || l.feedforward.cols() != fan_in)
        throw DimensionError("network: layer " + std::to_string(i) + " feed-forward weights have wrong shape");
      if (l.recurrent.has_value() != spec.layers[i].recurrent)
        throw DimensionError("network: layer " + std::to_string(i) + " recurrence flag and weights disagree");
      if (l.recurrent && (l.recurrent->rows() != l.width() || l.recurrent->cols() != l.width()))
        throw DimensionError("network: layer " + std::to_string(i) + " recurrent weights must be square");
      if (!l.feedforward.allFinite() || (l.recurrent && !l.recurrent->allFinite()))
        throw DimensionError("network: layer " + std::to_string(i) + " has non-finite weights");
      fan_in = l.width();
    }
  }
};

// Weights i.i.d. uniform in [-b, b], b = sqrt(1 / fan_in); recurrent weights
// use fan_in = layer width. Matrices are filled row-major, W before V, layer
// by layer, from one mt19937_64 stream seeded with `seed`.
template <typename Scalar = double>
Network<Scalar> init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network<Scalar> net;
  net.spec = spec;
  net.seed = seed;
  std::mt19937_64 gen(seed);
  auto fill = [&gen](MatrixX<Scalar>& m, int fan_in) {
    const double b = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> dist(-b, b);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<Scalar>(dist(gen));
  };
  int fan_in = spec.input_width;
  for (const auto& ls : spec.layers) {
    DenseLifLayer<Scalar> layer;
    layer.neuron = spec.neuron;
    layer.feedforward.resize(ls.width, fan_in);
    fill(layer.feedforward, fan_in);
    if (ls.recurrent) {
      layer.recurrent = MatrixX<Scalar>(ls.width, ls.width);
      fill(*layer.recurrent, ls.width);
    }
    net.layers.push_back(std::move(layer));
    fan_in = ls.width;
  }
  return net;
}

// Per-layer record of the unrolled forward pass.
template <typename Scalar = double>
struct LayerTrace {
  Sequence<Scalar> current;    // W x(t) + V o(t-1)
  Sequence<Scalar> potential;  // post-update u(t)
  Sequence<Scalar> spikes;     // o(t)
};

template <typename Scalar = double>
struct Tape {
  Sequence<Scalar> input;
  std::vector<LayerTrace<Scalar>> layers;
  SpikeFunction spike_fn = SpikeFunction::heaviside;

  int steps() const { return input.steps(); }
  int batch() const { return input.batch(); }

  // u(t-1), i.e. the potential carried into step t (zero at t = 0).
  MatrixX<Scalar> potential_before(std::size_t layer, int t) const {
    const auto& tr = layers[layer];
    if (t == 0) return MatrixX<Scalar>::Zero(tr.potential.neurons(), tr.potential.batch());
    return tr.potential[t - 1];
  }
};

template <typename Scalar = double>
struct ForwardResult {
  Tape<Scalar> tape;
  MatrixX<Scalar> spike_counts;    // output neurons x batch, summed over all steps
  MatrixX<Scalar> potential_sums;  // output neurons x batch, summed over all steps
};

// Time-unrolled forward pass. Layer n at step t receives W_n o^{n-1}(t) plus,
// when recurrent, V_n o^n(t-1). Membranes start at zero for every sample.
template <typename Scalar = double>
ForwardResult<Scalar> forward_sequence(const Network<Scalar>& net, const Sequence<Scalar>& input,
                                       SpikeFunction spike_fn = SpikeFunction::heaviside) {
  if (net.layers.empty()) throw DimensionError("forward_sequence: network has no layers");
  if (input.steps() == 0) throw DimensionError("forward_sequence: input has no time steps");
  if (net.spec.time_steps > 0 && input.steps() != net.spec.time_steps)
    throw DimensionError("forward_sequence: input has " + std::to_string(input.steps()) +
                         " steps, network expects " + std::to_string(net.spec.time_steps));
  if (input.neurons() != net.layers.front().fan_in())
    throw DimensionError("forward_sequence: input width " + std::to_string(input.neurons()) +
                         " does not match first layer fan-in " + std::to_string(net.layers.front().fan_in()));
  const int steps = input.steps();
  const int batch = input.batch();
  for (const auto& f : input.frames) {
    if (f.rows() != input.neurons() || f.cols() != batch)
      throw DimensionError("forward_sequence: ragged input frames");
  }

  ForwardResult<Scalar> result;
  Tape<Scalar>& tape = result.tape;
  tape.input = input;
  tape.spike_fn = spike_fn;
  tape.layers.resize(net.layers.size());

  const Sequence<Scalar>* below = &tape.input;
  for (std::size_t n = 0; n < net.layers.size(); ++n) {
    const auto& layer = net.layers[n];
    auto& tr = tape.layers[n];
    const int width = layer.width();
    tr.current = Sequence<Scalar>(steps, width, batch);
    tr.potential = Sequence<Scalar>(steps, width, batch);
    tr.spikes = Sequence<Scalar>(steps, width, batch);
    MatrixX<Scalar> u = MatrixX<Scalar>::Zero(width, batch);
    MatrixX<Scalar> o = MatrixX<Scalar>::Zero(width, batch);
    for (int t = 0; t < steps; ++t) {
      MatrixX<Scalar>& current = tr.current[t];
      current.noalias() = layer.feedforward * (*below)[t];
      if (layer.recurrent) current.noalias() += *layer.recurrent * o;
      u = integrate(u, o, current, layer.neuron);
      o = fire(u, layer.neuron, spike_fn);
      tr.potential[t] = u;
      tr.spikes[t] = o;
    }
    below = &tr.spikes;
  }

  const auto& out = tape.layers.back();
  result.spike_counts = MatrixX<Scalar>::Zero(out.spikes.neurons(), batch);
  result.potential_sums = MatrixX<Scalar>::Zero(out.spikes.neurons(), batch);
  for (int t = 0; t < steps; ++t) {
    result.spike_counts += out.spikes[t];
    result.potential_sums += out.potential[t];
  }
  return result;
}

// Mean spike count ("rate") or mean post-update potential ("potential") of
// each output neuron over the readout window; classes x batch.
template <typename Scalar = double>
MatrixX<Scalar> readout_logits(const LayerTrace<Scalar>& output, const ReadoutSpec& readout) {
  const int steps = output.spikes.steps();
  if (steps == 0) throw DimensionError("readout_logits: record has no time steps");
  const auto [begin, end] = readout.window(steps);
  const auto& src = readout.mode == ReadoutMode::rate ? output.spikes : output.potential;
  MatrixX<Scalar> logits = MatrixX<Scalar>::Zero(src.neurons(), src.batch());
  for (int t = begin; t < end; ++t) logits += src[t];
  return logits / static_cast<Scalar>(end - begin);
}

template <typename Scalar = double>
MatrixX<Scalar> readout_logits(const Tape<Scalar>& tape, const ReadoutSpec& readout) {
  return readout_logits(tape.layers.back(), readout);
}

// Column-wise argmax; ties go to the lowest class index.
template <typename Scalar>
std::vector<int> predict_classes(const MatrixX<Scalar>& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.rows(); ++c)
      if (logits(c, b) > logits(best, b)) best = c;
    out[static_cast<std::size_t>(b)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace liflab
