#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace liflab {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

// Thrown when operand shapes disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a byte stream or text file does not match its declared layout.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by config validation; the message names the offending field(s).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A time-major sequence of (neurons x batch) frames. Column b of every frame
// belongs to sample b, so a layer update is a single matrix product.
template <typename Scalar = double>
struct Sequence {
  std::vector<MatrixX<Scalar>> frames;

  Sequence() = default;
  Sequence(int steps, int neurons, int batch)
      : frames(static_cast<std::size_t>(steps), MatrixX<Scalar>::Zero(neurons, batch)) {}

  int steps() const { return static_cast<int>(frames.size()); }
  int neurons() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }
  int batch() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }

  MatrixX<Scalar>& operator[](int t) { return frames[static_cast<std::size_t>(t)]; }
  const MatrixX<Scalar>& operator[](int t) const { return frames[static_cast<std::size_t>(t)]; }

  bool is_binary() const {
    for (const auto& f : frames) {
      if (!((f.array() == Scalar(0)) || (f.array() == Scalar(1))).all()) return false;
    }
    return true;
  }

  // Sample b as a (steps x neurons) matrix.
  MatrixX<Scalar> sample(int b) const {
    MatrixX<Scalar> out(steps(), neurons());
    for (int t = 0; t < steps(); ++t) out.row(t) = frames[t].col(b).transpose();
    return out;
  }

  // Inverse of sample(): a (steps x neurons) matrix as a batch of one.
  static Sequence from_sample(const MatrixX<Scalar>& m) {
    Sequence s;
    s.frames.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index t = 0; t < m.rows(); ++t) s.frames.push_back(m.row(t).transpose());
    return s;
  }

  bool operator==(const Sequence& other) const {
    if (frames.size() != other.frames.size()) return false;
    for (std::size_t t = 0; t < frames.size(); ++t) {
      if (frames[t].rows() != other.frames[t].rows() || frames[t].cols() != other.frames[t].cols() ||
          frames[t] != other.frames[t])
        return false;
    }
    return true;
  }
};

// Binary spike array (time x neurons x batch); the only inter-layer currency.
using SpikeTensor = Sequence<double>;

}  // namespace liflab
