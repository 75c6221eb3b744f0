#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "liflab/network.hpp"

namespace liflab {

template <typename Scalar>
struct LossResult {
  Scalar loss = 0;           // mean over the batch
  MatrixX<Scalar> dlogits;   // dL/dlogits, classes x batch
};

// Mean softmax cross-entropy over the columns of `logits`.
template <typename Scalar>
LossResult<Scalar> softmax_cross_entropy(const MatrixX<Scalar>& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols())
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.cols()) + " samples");
  LossResult<Scalar> r;
  r.dlogits.resize(logits.rows(), logits.cols());
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= logits.rows()) throw DimensionError("softmax_cross_entropy: label out of range");
    const Scalar m = logits.col(b).maxCoeff();
    VectorX<Scalar> e = (logits.col(b).array() - m).exp().matrix();
    const Scalar z = e.sum();
    r.loss += (std::log(z) + m - logits(y, b)) * inv_batch;
    r.dlogits.col(b) = e / z * inv_batch;
    r.dlogits(y, b) -= inv_batch;
  }
  return r;
}

template <typename Scalar>
struct Gradients {
  std::vector<MatrixX<Scalar>> params;       // same order as Network::parameters()
  Sequence<Scalar> input;                    // dL/dx(t); filled on request
  std::vector<Sequence<Scalar>> potential;   // dL/du(t) per layer; filled on request
  std::vector<Sequence<Scalar>> spikes;      // dL/do(t) per layer; filled on request
};

struct BpttOptions {
  bool input_gradient = false;
  bool keep_state_gradients = false;
};

// Reverse-mode pass over a tape:
//   dL/du(t) = dL/do(t) g(u(t)) + dL/du(t+1) du(t+1)/du(t),
// with du(t+1)/du(t) = k (1 - o(t)) under reset and k without. The reset
// factor is held constant (no gradient through its dependence on u).
// Recurrent layers add V^T dL/du(t+1) to dL/do(t).
template <typename Scalar>
Gradients<Scalar> bptt_gradients(const Tape<Scalar>& tape, const Network<Scalar>& net,
                                 const MatrixX<Scalar>& dlogits, const BpttOptions& opts = {}) {
  if (tape.layers.size() != net.layers.size()) throw DimensionError("bptt_gradients: tape/net layer count mismatch");
  const int steps = tape.steps();
  const int batch = tape.batch();
  for (std::size_t n = 0; n < net.layers.size(); ++n) {
    const auto& tr = tape.layers[n];
    if (tr.potential.steps() != steps || tr.potential.neurons() != net.layers[n].width() ||
        tr.potential.batch() != batch)
      throw DimensionError("bptt_gradients: tape layer " + std::to_string(n) + " does not match network");
  }
  if (tape.input.neurons() != net.layers.front().fan_in())
    throw DimensionError("bptt_gradients: tape input width does not match network");
  if (dlogits.rows() != net.layers.back().width() || dlogits.cols() != batch)
    throw DimensionError("bptt_gradients: loss gradient must be classes x batch");

  const std::size_t depth = net.layers.size();
  Gradients<Scalar> grads;
  std::vector<MatrixX<Scalar>> dW(depth), dV(depth);
  if (opts.keep_state_gradients) {
    grads.potential.resize(depth);
    grads.spikes.resize(depth);
  }

  // Gradient arriving at the spikes of the layer being processed.
  const auto& readout = net.spec.readout;
  const auto [win_begin, win_end] = readout.window(steps);
  const Scalar inv_window = Scalar(1) / static_cast<Scalar>(win_end - win_begin);
  const int out_width = net.layers.back().width();
  Sequence<Scalar> ext(steps, out_width, batch);
  Sequence<Scalar> direct_u;  // potential readout injects at u directly
  if (readout.mode == ReadoutMode::rate) {
    for (int t = win_begin; t < win_end; ++t) ext[t] = dlogits * inv_window;
  } else {
    direct_u = Sequence<Scalar>(steps, out_width, batch);
    for (int t = win_begin; t < win_end; ++t) direct_u[t] = dlogits * inv_window;
  }

  for (std::size_t ni = depth; ni-- > 0;) {
    const auto& layer = net.layers[ni];
    const auto& tr = tape.layers[ni];
    const NeuronConfig& cfg = layer.neuron;
    const Scalar k = static_cast<Scalar>(cfg.leak);
    const int width = layer.width();
    const Sequence<Scalar>& below = ni == 0 ? tape.input : tape.layers[ni - 1].spikes;
    const bool need_below = ni > 0 || opts.input_gradient;

    dW[ni] = MatrixX<Scalar>::Zero(layer.feedforward.rows(), layer.feedforward.cols());
    if (layer.recurrent) dV[ni] = MatrixX<Scalar>::Zero(width, width);
    Sequence<Scalar> below_ext;
    if (need_below) below_ext = Sequence<Scalar>(steps, layer.fan_in(), batch);
    if (opts.keep_state_gradients) {
      grads.potential[ni] = Sequence<Scalar>(steps, width, batch);
      grads.spikes[ni] = Sequence<Scalar>(steps, width, batch);
    }

    MatrixX<Scalar> du_next = MatrixX<Scalar>::Zero(width, batch);
    MatrixX<Scalar> dout(width, batch);
    MatrixX<Scalar> du(width, batch);
    for (int t = steps - 1; t >= 0; --t) {
      dout = ext[t];
      if (layer.recurrent) dout.noalias() += layer.recurrent->transpose() * du_next;
      const auto g = surrogate_pseudo_derivative(tr.potential[t], cfg);
      if (cfg.reset) {
        du = (dout.array() * g.array() + du_next.array() * k * (Scalar(1) - tr.spikes[t].array())).matrix();
      } else {
        du = (dout.array() * g.array() + du_next.array() * k).matrix();
      }
      if (!direct_u.frames.empty() && ni + 1 == depth) du += direct_u[t];

      dW[ni].noalias() += du * below[t].transpose();
      if (layer.recurrent && t > 0) dV[ni].noalias() += du * tr.spikes[t - 1].transpose();
      if (need_below) below_ext[t].noalias() = layer.feedforward.transpose() * du;
      if (opts.keep_state_gradients) {
        grads.potential[ni][t] = du;
        grads.spikes[ni][t] = dout;
      }
      du_next.swap(du);
    }
    if (ni == 0) {
      if (opts.input_gradient) grads.input = std::move(below_ext);
    } else {
      ext = std::move(below_ext);
    }
  }

  for (std::size_t n = 0; n < depth; ++n) {
    grads.params.push_back(std::move(dW[n]));
    if (net.layers[n].recurrent) grads.params.push_back(std::move(dV[n]));
  }
  return grads;
}

// Rescales the gradient list in place so its global L2 norm is <= max_norm.
template <typename Scalar>
Scalar clip_grad_norm(std::vector<MatrixX<Scalar>>& grads, Scalar max_norm) {
  Scalar sq = 0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const Scalar norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    for (auto& g : grads) g *= max_norm / norm;
  }
  return norm;
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct OptimizerState {
  AdamConfig hyper;
  std::vector<MatrixX<Scalar>> first_moment;
  std::vector<MatrixX<Scalar>> second_moment;
  long step = 0;
};

// Bias-corrected Adam. Moments are allocated lazily on the first call.
template <typename Scalar>
void adam_step(const std::vector<MatrixX<Scalar>*>& params, const std::vector<MatrixX<Scalar>>& grads,
               OptimizerState<Scalar>& state) {
  if (params.size() != grads.size()) throw DimensionError("adam_step: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.push_back(MatrixX<Scalar>::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(MatrixX<Scalar>::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw DimensionError("adam_step: optimizer state mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols() ||
        state.first_moment[i].rows() != grads[i].rows() || state.first_moment[i].cols() != grads[i].cols())
      throw DimensionError("adam_step: shape mismatch at parameter " + std::to_string(i));
  }

  ++state.step;
  const auto& h = state.hyper;
  const Scalar b1 = static_cast<Scalar>(h.beta1);
  const Scalar b2 = static_cast<Scalar>(h.beta2);
  const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(h.beta1, static_cast<double>(state.step)));
  const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(h.beta2, static_cast<double>(state.step)));
  const Scalar lr = static_cast<Scalar>(h.learning_rate);
  const Scalar eps = static_cast<Scalar>(h.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = grads[i].array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    params[i]->array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
  }
}

// base_lr * gamma^floor(epoch / step_size)
double step_lr(double base_lr, int epoch, int step_size, double gamma);

}  // namespace liflab
