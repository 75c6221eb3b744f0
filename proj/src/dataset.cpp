#include "liflab/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace liflab {

std::size_t SparseFrames::total_active() const {
  std::size_t n = 0;
  for (const auto& f : active) n += f.size();
  return n;
}

Matrix SparseFrames::to_dense() const {
  Matrix m = Matrix::Zero(steps(), width);
  for (int t = 0; t < steps(); ++t)
    for (auto i : active[static_cast<std::size_t>(t)]) m(t, i) += 1.0;
  return m;
}

SparseFrames SparseFrames::from_dense(const Matrix& frames) {
  SparseFrames s;
  s.width = static_cast<int>(frames.cols());
  s.active.resize(static_cast<std::size_t>(frames.rows()));
  for (Eigen::Index t = 0; t < frames.rows(); ++t)
    for (Eigen::Index i = 0; i < frames.cols(); ++i) {
      const auto count = static_cast<int>(frames(t, i));
      for (int k = 0; k < count; ++k) s.active[static_cast<std::size_t>(t)].push_back(static_cast<std::int32_t>(i));
    }
  return s;
}

int Sample::steps() const {
  return std::holds_alternative<SparseFrames>(input) ? std::get<SparseFrames>(input).steps()
                                                     : std::get<StaticCurrent>(input).steps;
}

int Sample::width() const {
  return std::holds_alternative<SparseFrames>(input)
             ? std::get<SparseFrames>(input).width
             : static_cast<int>(std::get<StaticCurrent>(input).intensity.size());
}

int Dataset::max_steps() const {
  int m = 0;
  for (const auto& s : samples) m = std::max(m, s.steps());
  return m;
}

Sequence<double> Dataset::batch(std::span<const std::size_t> indices, int steps) const {
  if (steps <= 0) steps = max_steps();
  Sequence<double> seq(steps, width, static_cast<int>(indices.size()));
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Sample& s = samples.at(indices[b]);
    const auto col = static_cast<Eigen::Index>(b);
    if (const auto* sf = std::get_if<SparseFrames>(&s.input)) {
      const int n = std::min(steps, sf->steps());
      for (int t = 0; t < n; ++t)
        for (auto i : sf->active[static_cast<std::size_t>(t)]) seq[t](i, col) += 1.0;
    } else {
      const auto& sc = std::get<StaticCurrent>(s.input);
      const int n = std::min(steps, sc.steps);
      for (int t = 0; t < n; ++t) seq[t].col(col) = sc.intensity;
    }
  }
  return seq;
}

std::vector<int> Dataset::labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples.at(i).label);
  return out;
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.width() != width)
      throw DimensionError("dataset: sample " + std::to_string(i) + " has width " + std::to_string(s.width()) +
                           ", dataset width is " + std::to_string(width));
    if (s.label < 0 || (num_classes > 0 && s.label >= num_classes))
      throw DimensionError("dataset: sample " + std::to_string(i) + " label out of range");
  }
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace liflab
