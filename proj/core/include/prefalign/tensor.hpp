#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Core>

namespace prefalign {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// L x d output of a text encoder. Row i is the embedding of token slot i.
struct TokenEmbeddingSequence {
  Matrix tokens;
  std::string source_text;

  Eigen::Index length() const { return tokens.rows(); }
  Eigen::Index dim() const { return tokens.cols(); }

  bool all_finite() const { return tokens.allFinite(); }
  bool operator==(const TokenEmbeddingSequence& other) const {
    return source_text == other.source_text && tokens.rows() == other.tokens.rows() &&
           tokens.cols() == other.tokens.cols() && tokens == other.tokens;
  }
};

// h x w x c feature map stored as an (h*w) x c matrix, rows in raster order
// (row index r*w + col).
struct LatentFeatureMap {
  int height = 0;
  int width = 0;
  Matrix cells;  // (height*width) x channels

  LatentFeatureMap() = default;
  LatentFeatureMap(int h, int w, int channels)
      : height(h), width(w), cells(Matrix::Zero(static_cast<Eigen::Index>(h) * w, channels)) {}

  int channels() const { return static_cast<int>(cells.cols()); }
  std::size_t cell_count() const { return static_cast<std::size_t>(height) * width; }
  bool same_shape(const LatentFeatureMap& o) const {
    return height == o.height && width == o.width && channels() == o.channels();
  }
  double& at(int row, int col, int ch) { return cells(static_cast<Eigen::Index>(row) * width + col, ch); }
  double at(int row, int col, int ch) const {
    return cells(static_cast<Eigen::Index>(row) * width + col, ch);
  }
  bool operator==(const LatentFeatureMap& o) const { return same_shape(o) && cells == o.cells; }
};

using NoisePrediction = LatentFeatureMap;

}  // namespace prefalign
