#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liflab/dataset.hpp"
#include "liflab/ingest.hpp"
#include "liflab/network.hpp"

namespace liflab {

struct FiringRateHistogram {
  Vector rates;                      // per neuron, in [0, 1]
  std::vector<std::size_t> counts;   // bins over [0, 1]; the last bin is closed
  double mean() const { return rates.size() ? rates.mean() : 0.0; }
};

// Per-neuron rate = spikes / (steps * samples) for a (neurons x batch) spike record.
Vector neuron_firing_rates(const Sequence<double>& spikes);
FiringRateHistogram make_histogram(const Vector& rates, int bins = 20);

// One histogram per layer, over all samples of `data` at its longest length.
std::vector<FiringRateHistogram> firing_rate_stats(const Network<double>& net, const Dataset& data, int bins = 20,
                                                   int chunk = 256);

// Mean silhouette coefficient with cosine distance d(x, y) = 1 - cos(x, y).
// Members of singleton clusters score 0, as does any sample with
// max(a, b) = 0. Throws std::invalid_argument for fewer than two classes, a
// label/row count mismatch, or an all-zero feature row.
double silhouette_cosine(const Matrix& features, std::span<const int> labels);

// 2-D loss slice theta + alpha * delta + beta * eta.
struct LandscapeOptions {
  int resolution = 41;   // points per axis
  double extent = 1.0;   // grid spans [-extent, extent]^2
  std::uint64_t seed = 0;
};

struct LandscapeGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  Matrix loss;  // alphas x betas
  std::uint64_t seed = 0;
  std::string normalization = "layer";

  // Long format: "alpha,beta,loss" with full double precision.
  void write_csv(std::ostream& out) const;
};

using ParameterBlocks = std::vector<Matrix>;
using LossFunction = std::function<double(const ParameterBlocks&)>;

// Two Gaussian directions with every block rescaled to the Frobenius norm of
// the matching parameter block. Blocks of zero norm get a zero direction.
std::pair<ParameterBlocks, ParameterBlocks> make_directions(const ParameterBlocks& params, std::uint64_t seed);

LandscapeGrid loss_landscape_scan(const ParameterBlocks& params, const LossFunction& loss,
                                  const LandscapeOptions& opts = {});

// Cross-entropy of `net` on the first min(probe_limit, size) samples.
LandscapeGrid loss_landscape_scan(const Network<double>& net, const Dataset& data, const LandscapeOptions& opts = {},
                                  std::size_t probe_limit = 1024);

struct GeneralizationPoint {
  double dt_ms = 0;
  int steps = 0;         // longest re-binned sample
  double accuracy = 0;
};

// Re-bins the raw test streams at each dt and evaluates the unchanged weights.
// The network's fixed time length (if any) is ignored, since T follows dt.
std::vector<GeneralizationPoint> generalization_sweep(const Network<double>& net, const StreamSet& test,
                                                      std::span<const double> dts_ms, bool counts = false);
// Header "1ms,2ms,..." then one row of accuracies.
void write_generalization_csv(std::ostream& out, std::span<const GeneralizationPoint> points);

// Time-mean spike vector of layer `layer` per sample (samples x width).
// Throws std::out_of_range on a bad layer index.
Matrix export_features(const Network<double>& net, const Dataset& data, int layer, int chunk = 256);
// Columns f0..f{w-1},label; values written with round-trip precision.
void write_features_csv(std::ostream& out, const Matrix& features, std::span<const int> labels);
std::pair<Matrix, std::vector<int>> read_features_csv(std::istream& in);

}  // namespace liflab
