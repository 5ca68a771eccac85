#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stokesheat {

/// Row-major dense matrix. Small on purpose: basis sizes stay in the
/// hundreds, so everything here is O(n^2) storage with plain loops.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class To, class From>
Matrix<To> matrix_cast(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(i, j) = static_cast<To>(m(i, j));
  return out;
}

/// Principal submatrix on the given (sorted or not) index set.
template <class T>
Matrix<T> principal(const Matrix<T>& m, std::span<const std::size_t> idx) {
  Matrix<T> out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

template <class T>
std::vector<T> multiply(const Matrix<T>& m, std::span<const T> x) {
  std::vector<T> y(m.rows(), T(0));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    T acc = T(0);
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

template <class T>
T dot(std::span<const T> x, std::span<const T> y) {
  T acc = T(0);
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace stokesheat
