#pragma once

#include <cmath>
#include <concepts>
#include <string>
#include <string_view>
#include <utility>

#include "liflab/types.hpp"

namespace liflab {

// Discrete LIF parameters shared by every neuron of a layer.
struct NeuronConfig {
  double leak = 0.3;             // k_tau in [0, 1]; 1 = no decay, 0 = complete decay
  bool reset = true;             // multiply the carry-over by (1 - o_prev)
  double threshold = 0.5;        // u_th
  double surrogate_width = 0.5;  // half-width a of the rectangular surrogate window

  // Throws ConfigError listing every violated field.
  void validate() const;

  bool operator==(const NeuronConfig&) const = default;
};

// How spikes are produced in the forward pass. Training always uses the
// Heaviside step; the hard sigmoid is the smoothed stand-in whose exact
// derivative equals the rectangular surrogate, used to check BPTT against
// finite differences.
enum class SpikeFunction { heaviside, hard_sigmoid };

// The five ablation variants. Recurrence is a network-level flag.
enum class Variant { baseline, no_leak, complete_leak, no_reset, recurrent };

struct VariantSettings {
  double leak;
  bool reset;
  bool recurrent;

  bool operator==(const VariantSettings&) const = default;
};

VariantSettings variant_settings(Variant v);
Variant parse_variant(std::string_view name);
std::string to_string(Variant v);

template <typename Scalar>
struct MembraneState {
  VectorX<Scalar> potentials;
  VectorX<Scalar> last_spikes;

  static MembraneState zeros(int width) {
    return {VectorX<Scalar>::Zero(width), VectorX<Scalar>::Zero(width)};
  }
};

// u' = k u (1 - o_prev) + I  (reset on)   or   u' = k u + I  (reset off).
// Works column-wise on (neurons x batch) blocks as well as on vectors.
template <typename DerivedU, typename DerivedO, typename DerivedI>
auto integrate(const Eigen::MatrixBase<DerivedU>& u_prev, const Eigen::MatrixBase<DerivedO>& o_prev,
               const Eigen::MatrixBase<DerivedI>& current, const NeuronConfig& cfg) {
  using Scalar = typename DerivedU::Scalar;
  using Plain = typename DerivedU::PlainObject;
  const Scalar k = static_cast<Scalar>(cfg.leak);
  Plain u(current.rows(), current.cols());
  if (cfg.reset) {
    u = (k * u_prev.array() * (Scalar(1) - o_prev.array()) + current.array()).matrix();
  } else {
    u = (k * u_prev.array() + current.array()).matrix();
  }
  return u;
}

template <typename Derived>
auto fire(const Eigen::MatrixBase<Derived>& u, const NeuronConfig& cfg,
          SpikeFunction fn = SpikeFunction::heaviside) {
  using Scalar = typename Derived::Scalar;
  const Scalar th = static_cast<Scalar>(cfg.threshold);
  if (fn == SpikeFunction::heaviside) {
    return typename Derived::PlainObject((u.array() >= th).template cast<Scalar>().matrix());
  }
  const Scalar a = static_cast<Scalar>(cfg.surrogate_width);
  return typename Derived::PlainObject(
      ((u.array() - th + a) / (Scalar(2) * a)).max(Scalar(0)).min(Scalar(1)).matrix());
}

// Rectangular window of height 1/(2a) on |u - u_th| <= a; integrates to 1.
template <std::floating_point Scalar>
Scalar surrogate_pseudo_derivative(Scalar u, const NeuronConfig& cfg) {
  const double a = cfg.surrogate_width;
  return std::abs(static_cast<double>(u) - cfg.threshold) <= a ? static_cast<Scalar>(1.0 / (2.0 * a))
                                                                : Scalar(0);
}

template <typename Derived>
auto surrogate_pseudo_derivative(const Eigen::MatrixBase<Derived>& u, const NeuronConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  const Scalar th = static_cast<Scalar>(cfg.threshold);
  const Scalar a = static_cast<Scalar>(cfg.surrogate_width);
  return typename Derived::PlainObject(
      ((u.array() - th).abs() <= a).template cast<Scalar>().matrix() / (Scalar(2) * a));
}

// One Euler step of a layer: returns the next state and its spike vector.
template <typename Scalar, typename DerivedI>
std::pair<MembraneState<Scalar>, VectorX<Scalar>> lif_step(const MembraneState<Scalar>& state,
                                                           const Eigen::MatrixBase<DerivedI>& input_current,
                                                           const NeuronConfig& cfg) {
  if (state.potentials.size() != state.last_spikes.size() || input_current.size() != state.potentials.size() ||
      input_current.cols() != 1) {
    throw DimensionError("lif_step: input current has " + std::to_string(input_current.size()) +
                         " entries, layer width is " + std::to_string(state.potentials.size()));
  }
  VectorX<Scalar> u = integrate(state.potentials, state.last_spikes, input_current, cfg);
  VectorX<Scalar> o = fire(u, cfg);
  return {MembraneState<Scalar>{u, o}, o};
}

}  // namespace liflab
