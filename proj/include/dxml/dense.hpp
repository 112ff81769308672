#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace dxml {

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A dim x count matrix whose columns are embedding vectors (label embeddings,
/// cluster centers, embedded training points). Each column is stored
/// contiguously so column(j) is a cheap view.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::size_t count, double fill = 0.0)
      : dim_(dim), count_(count), values_(dim * count, fill) {}

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return count_; }

  std::span<double> column(std::size_t j) { return {values_.data() + j * dim_, dim_}; }
  std::span<const double> column(std::size_t j) const {
    return {values_.data() + j * dim_, dim_};
  }

  double& at(std::size_t row, std::size_t col) { return values_[col * dim_ + row]; }
  double at(std::size_t row, std::size_t col) const { return values_[col * dim_ + row]; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Rounds every value to the nearest float so the 32-bit model file
/// reproduces it exactly.
inline void round_to_float(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace dxml
