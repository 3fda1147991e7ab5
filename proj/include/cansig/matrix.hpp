#pragma once

#include <cstddef>
#include <vector>

#include "cansig/errors.hpp"

namespace cansig {

/// Dense row-major matrix. Row index first: at(row, col).
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  T& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  const T& at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  T* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const T* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

/// Channel-major 3D tensor (ch, h, w), contiguous planes.
template <typename T>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int ch, int h, int w, T fill = T{})
      : ch_(ch), h_(h), w_(w), data_(static_cast<size_t>(ch) * h * w, fill) {}

  int channels() const { return ch_; }
  int height() const { return h_; }
  int width() const { return w_; }
  size_t size() const { return data_.size(); }

  T* plane(int c) { return data_.data() + static_cast<size_t>(c) * h_ * w_; }
  const T* plane(int c) const { return data_.data() + static_cast<size_t>(c) * h_ * w_; }

  T& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
  }
  const T& at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
  }

  void zero() { std::fill(data_.begin(), data_.end(), T{}); }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  int ch_ = 0;
  int h_ = 0;
  int w_ = 0;
  std::vector<T> data_;
};

/// Elementwise |a - b|. Throws ShapeMismatch when shapes differ.
template <typename T>
Matrix<T> absolute_difference(const Matrix<T>& a, const Matrix<T>& b) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch("absolute_difference: shapes differ");
  }
  Matrix<T> out(a.rows(), a.cols());
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& ov = out.data();
  for (size_t i = 0; i < av.size(); ++i) {
    ov[i] = av[i] > bv[i] ? av[i] - bv[i] : bv[i] - av[i];
  }
  return out;
}

}  // namespace cansig
