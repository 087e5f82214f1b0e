// Copyright 2026 The Lightning Attention Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lightning/errors.hpp"
#include "lightning/memory_probe.hpp"

namespace lightning {

/// Numeric mode of a matrix: kernels run in either, oracles only in reference.
enum class Precision { working, reference };

template <typename T>
inline constexpr Precision precision_of =
    std::is_same_v<T, double> ? Precision::reference : Precision::working;

inline const char* to_string(Precision p) {
  return p == Precision::reference ? "f64" : "f32";
}

/// Non-owning strided window onto row-major storage.
template <typename T>
struct MatrixView {
  T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  T& operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
  T* row(std::size_t r) const { return data + r * stride; }

  operator MatrixView<const T>() const  // NOLINT(google-explicit-constructor)
    requires(!std::is_const_v<T>)
  {
    return {data, rows, cols, stride};
  }
};

template <typename T>
using ConstMatrixView = MatrixView<const T>;

/// Dense row-major real matrix. Value semantics; copies are deep.
template <typename T>
class Matrix {
  static_assert(std::is_floating_point_v<T>, "Matrix holds real scalars");

 public:
  using value_type = T;
  using Storage = std::vector<T, TrackingAllocator<T>>;

  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  // Row-major literal: Matrix<double>(2, 2, {1, 2, 3, 4}).
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values)
      : rows_(rows), cols_(cols), data_(values) {
    if (data_.size() != rows * cols) {
      throw ShapeError("Matrix literal has " + std::to_string(data_.size()) +
                       " values for a " + std::to_string(rows) + "x" +
                       std::to_string(cols) + " matrix");
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t bytes() const noexcept { return data_.size() * sizeof(T); }
  static constexpr Precision precision() noexcept { return precision_of<T>; }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return {data_.data(), data_.size()}; }
  std::span<const T> values() const noexcept { return {data_.data(), data_.size()}; }
  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  MatrixView<T> view() noexcept { return {data_.data(), rows_, cols_, cols_}; }
  ConstMatrixView<T> view() const noexcept { return {data_.data(), rows_, cols_, cols_}; }
  MatrixView<T> view(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) {
    assert(r0 + rows <= rows_ && c0 + cols <= cols_);
    return {data_.data() + r0 * cols_ + c0, rows, cols, cols_};
  }
  ConstMatrixView<T> view(std::size_t r0, std::size_t c0, std::size_t rows,
                          std::size_t cols) const {
    assert(r0 + rows <= rows_ && c0 + cols <= cols_);
    return {data_.data() + r0 * cols_ + c0, rows, cols, cols_};
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Storage data_;
};

using MatrixD = Matrix<double>;
using MatrixF = Matrix<float>;

template <typename T>
std::string shape_string(const Matrix<T>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

template <typename T>
Matrix<T> to_matrix(ConstMatrixView<T> v) {
  Matrix<T> m(v.rows, v.cols);
  for (std::size_t r = 0; r < v.rows; ++r)
    for (std::size_t c = 0; c < v.cols; ++c) m(r, c) = v(r, c);
  return m;
}

template <typename To, typename From>
Matrix<To> cast(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = static_cast<To>(m.data()[i]);
  return out;
}

}  // namespace lightning
