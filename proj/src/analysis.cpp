#include "liflab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "liflab/training.hpp"

namespace liflab {

Vector neuron_firing_rates(const Sequence<double>& spikes) {
  Vector total = Vector::Zero(spikes.neurons());
  for (const auto& f : spikes.frames) total += f.rowwise().sum();
  const double denom = static_cast<double>(spikes.steps()) * static_cast<double>(spikes.batch());
  return denom > 0 ? Vector(total / denom) : total;
}

FiringRateHistogram make_histogram(const Vector& rates, int bins) {
  if (bins < 1) throw ConfigError("make_histogram: bins must be >= 1");
  FiringRateHistogram h;
  h.rates = rates;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (Eigen::Index i = 0; i < rates.size(); ++i) {
    const double r = std::clamp(rates(i), 0.0, 1.0);
    const int b = std::min(bins - 1, static_cast<int>(std::floor(r * bins)));
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

std::vector<FiringRateHistogram> firing_rate_stats(const Network<double>& net, const Dataset& data, int bins,
                                                   int chunk) {
  if (data.size() == 0) throw std::invalid_argument("firing_rate_stats: empty dataset");
  const int steps = data.max_steps();
  std::vector<Vector> totals;
  for (const auto& layer : net.layers) totals.push_back(Vector::Zero(layer.width()));
  const auto all = iota_indices(data.size());
  for (std::size_t start = 0; start < all.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t stop = std::min(all.size(), start + static_cast<std::size_t>(chunk));
    const auto input = data.batch(std::span<const std::size_t>(all.data() + start, stop - start), steps);
    const auto fwd = forward_sequence(net, input);
    for (std::size_t n = 0; n < net.layers.size(); ++n)
      for (const auto& f : fwd.tape.layers[n].spikes.frames) totals[n] += f.rowwise().sum();
  }
  std::vector<FiringRateHistogram> out;
  const double denom = static_cast<double>(steps) * static_cast<double>(data.size());
  for (auto& t : totals) out.push_back(make_histogram(t / denom, bins));
  return out;
}

double silhouette_cosine(const Matrix& features, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.size() != n) throw std::invalid_argument("silhouette_cosine: label count does not match feature rows");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw std::invalid_argument("silhouette_cosine: need at least two classes");

  const Eigen::Index d = features.cols();
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (Eigen::Index k = 0; k < d; ++k) s += features(static_cast<Eigen::Index>(i), k) * features(static_cast<Eigen::Index>(i), k);
    if (s == 0) throw std::invalid_argument("silhouette_cosine: feature row " + std::to_string(i) + " is all zero");
    sq[i] = s;
  }
  // Plain loops keep identical rows bit-identical, so duplicates sit at distance 0.
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0;
      for (Eigen::Index k = 0; k < d; ++k)
        dot += features(static_cast<Eigen::Index>(i), k) * features(static_cast<Eigen::Index>(j), k);
      const double c = std::clamp(dot / std::sqrt(sq[i] * sq[j]), -1.0, 1.0);
      dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 - c;
      dist(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0 - c;
    }
  }

  double total = 0;
  std::map<int, double> sums;
  for (std::size_t i = 0; i < n; ++i) {
    const int li = labels[i];
    if (sizes[li] == 1) continue;  // s_i = 0
    sums.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[labels[j]] += dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    const double a = sums[li] / static_cast<double>(sizes[li] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, s] : sums)
      if (l != li) b = std::min(b, s / static_cast<double>(sizes[l]));
    const double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

void LandscapeGrid::write_csv(std::ostream& out) const {
  out << "alpha,beta,loss\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < alphas.size(); ++i)
    for (std::size_t j = 0; j < betas.size(); ++j)
      out << alphas[i] << ',' << betas[j] << ',' << loss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
          << '\n';
}

std::pair<ParameterBlocks, ParameterBlocks> make_directions(const ParameterBlocks& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    ParameterBlocks dir;
    for (const auto& p : params) {
      Matrix m(p.rows(), p.cols());
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = normal(rng);
      const double dn = m.norm();
      const double pn = p.norm();
      if (dn > 0 && pn > 0) {
        m *= pn / dn;
      } else {
        m.setZero();
      }
      dir.push_back(std::move(m));
    }
    return dir;
  };
  auto delta = draw();
  auto eta = draw();
  return {std::move(delta), std::move(eta)};
}

namespace {

std::vector<double> axis(int resolution, double extent) {
  if (resolution < 1) throw ConfigError("landscape: resolution must be >= 1");
  if (resolution == 1) return {0.0};
  std::vector<double> out(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i)
    out[static_cast<std::size_t>(i)] = -extent + 2.0 * extent * i / (resolution - 1);
  return out;
}

}  // namespace

LandscapeGrid loss_landscape_scan(const ParameterBlocks& params, const LossFunction& loss,
                                  const LandscapeOptions& opts) {
  LandscapeGrid g;
  g.seed = opts.seed;
  g.alphas = axis(opts.resolution, opts.extent);
  g.betas = g.alphas;
  g.loss.resize(static_cast<Eigen::Index>(g.alphas.size()), static_cast<Eigen::Index>(g.betas.size()));
  const auto [delta, eta] = make_directions(params, opts.seed);
  ParameterBlocks moved = params;
  for (std::size_t i = 0; i < g.alphas.size(); ++i) {
    for (std::size_t j = 0; j < g.betas.size(); ++j) {
      for (std::size_t k = 0; k < params.size(); ++k)
        moved[k] = params[k] + g.alphas[i] * delta[k] + g.betas[j] * eta[k];
      g.loss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = loss(moved);
    }
  }
  return g;
}

LandscapeGrid loss_landscape_scan(const Network<double>& net, const Dataset& data, const LandscapeOptions& opts,
                                  std::size_t probe_limit) {
  const std::size_t n = std::min(probe_limit ? probe_limit : data.size(), data.size());
  if (n == 0) throw std::invalid_argument("loss_landscape_scan: empty probe set");
  const auto idx = iota_indices(n);
  const auto input = data.batch(idx);
  const auto labels = data.labels(idx);

  ParameterBlocks params;
  for (const auto* p : net.parameters()) params.push_back(*p);
  Network<double> probe = net;
  const LossFunction f = [&](const ParameterBlocks& blocks) {
    auto ptrs = probe.parameters();
    for (std::size_t k = 0; k < ptrs.size(); ++k) *ptrs[k] = blocks[k];
    const auto fwd = forward_sequence(probe, input);
    return softmax_cross_entropy<double>(readout_logits(fwd.tape, probe.spec.readout), labels).loss;
  };
  return loss_landscape_scan(params, f, opts);
}

std::vector<GeneralizationPoint> generalization_sweep(const Network<double>& net, const StreamSet& test,
                                                      std::span<const double> dts_ms, bool counts) {
  Network<double> free_t = net;
  free_t.spec.time_steps = 0;
  std::vector<GeneralizationPoint> out;
  for (double dt : dts_ms) {
    const Dataset data = frames_from_streams(test, dt, counts);
    if (data.width != net.layers.front().fan_in())
      throw DimensionError("generalization_sweep: frame width " + std::to_string(data.width) +
                           " does not match network input width");
    std::size_t correct = 0;
    const auto all = iota_indices(data.size());
    const int steps = data.max_steps();
    for (std::size_t start = 0; start < all.size(); start += 256) {
      const std::size_t stop = std::min(all.size(), start + 256);
      std::span<const std::size_t> idx(all.data() + start, stop - start);
      const auto fwd = forward_sequence(free_t, data.batch(idx, steps));
      const auto pred = predict_classes<double>(readout_logits(fwd.tape, free_t.spec.readout));
      const auto labels = data.labels(idx);
      for (std::size_t k = 0; k < pred.size(); ++k) correct += pred[k] == labels[k];
    }
    out.push_back({dt, steps, data.size() ? static_cast<double>(correct) / static_cast<double>(data.size()) : 0.0});
  }
  return out;
}

void write_generalization_csv(std::ostream& out, std::span<const GeneralizationPoint> points) {
  for (std::size_t k = 0; k < points.size(); ++k) out << (k ? "," : "") << points[k].dt_ms << "ms";
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < points.size(); ++k) out << (k ? "," : "") << points[k].accuracy;
  out << '\n';
}

Matrix export_features(const Network<double>& net, const Dataset& data, int layer, int chunk) {
  if (layer < 0 || layer >= static_cast<int>(net.layers.size()))
    throw std::out_of_range("export_features: layer " + std::to_string(layer) + " out of range [0, " +
                            std::to_string(net.layers.size()) + ")");
  const int steps = data.max_steps();
  const auto width = net.layers[static_cast<std::size_t>(layer)].width();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(data.size()), width);
  const auto all = iota_indices(data.size());
  for (std::size_t start = 0; start < all.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t stop = std::min(all.size(), start + static_cast<std::size_t>(chunk));
    const auto fwd =
        forward_sequence(net, data.batch(std::span<const std::size_t>(all.data() + start, stop - start), steps));
    Matrix sum = Matrix::Zero(width, static_cast<Eigen::Index>(stop - start));
    for (const auto& f : fwd.tape.layers[static_cast<std::size_t>(layer)].spikes.frames) sum += f;
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(stop - start)) =
        sum.transpose() / static_cast<double>(steps);
  }
  return out;
}

void write_features_csv(std::ostream& out, const Matrix& features, std::span<const int> labels) {
  if (labels.size() != static_cast<std::size_t>(features.rows()))
    throw DimensionError("write_features_csv: label count does not match feature rows");
  for (Eigen::Index k = 0; k < features.cols(); ++k) out << 'f' << k << ',';
  out << "label\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index k = 0; k < features.cols(); ++k) out << features(r, k) << ',';
    out << labels[static_cast<std::size_t>(r)] << '\n';
  }
}

std::pair<Matrix, std::vector<int>> read_features_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("features CSV: missing header");
  const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (static_cast<Eigen::Index>(row.size()) != cols + 1) throw FormatError("features CSV: ragged row");
    labels.push_back(static_cast<int>(row.back()));
    row.pop_back();
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (Eigen::Index k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(r), k) = rows[r][static_cast<std::size_t>(k)];
  return {std::move(m), std::move(labels)};
}

}  // namespace liflab
