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

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "lightning/matrix.hpp"

namespace lightning {

enum class Trans { no, yes };

/// C = alpha * op(A) * op(B) + beta * C on strided views. Cache-blocked over
/// the reduction dimension; all four transpose combinations are supported.
template <typename T>
void gemm(Trans trans_a, Trans trans_b, T alpha, ConstMatrixView<T> a,
          ConstMatrixView<T> b, T beta, MatrixView<T> c);

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b);
/// A^T * B without materializing the transpose.
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b);
/// A * B^T without materializing the transpose.
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b);
template <typename T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b);
template <typename T>
Matrix<T> subtract(const Matrix<T>& a, const Matrix<T>& b);
template <typename T>
Matrix<T> scale(const Matrix<T>& a, T s);
/// y += alpha * x, shapes must match.
template <typename T>
void axpy(T alpha, const Matrix<T>& x, Matrix<T>& y);
template <typename T>
Matrix<T> transpose(const Matrix<T>& a);

/// Lower-triangular B x B mask with M[t][s] = lambda^(t-s) for t >= s.
template <typename T>
Matrix<T> causal_decay_mask(std::size_t block, double lambda);

/// diag(lambda, lambda^2, ..., lambda^B).
template <typename T>
Matrix<T> diag_lambda(std::size_t block, double lambda);

/// Throws DomainError unless lambda is in (0, 1].
void check_decay(double lambda);

/// Powers lambda^0 .. lambda^count by iterative multiplication, in double.
std::vector<double> decay_powers(double lambda, std::size_t count);

struct BlockLayout {
  std::size_t n = 0;
  std::size_t block = 0;
  std::size_t count = 0;  // ceil(n / block)
  std::size_t tail = 0;   // rows in the final block, in [1, block]

  std::size_t begin(std::size_t t) const { return t * block; }
  std::size_t length(std::size_t t) const { return t + 1 == count ? tail : block; }
};

BlockLayout make_block_layout(std::size_t n, std::size_t block);

template <typename T>
struct BlockPartition {
  std::vector<Matrix<T>> blocks;
  BlockLayout layout;
};

/// Splits X by rows into ceil(n/B) contiguous blocks; the last may be partial.
template <typename T>
BlockPartition<T> block_partition(const Matrix<T>& x, std::size_t block);

template <typename T>
Matrix<T> concat_rows(std::span<const Matrix<T>> parts);
template <typename T>
Matrix<T> concat_cols(std::span<const Matrix<T>> parts);

template <typename T>
Matrix<T> slice_rows(const Matrix<T>& a, std::size_t begin, std::size_t count);
template <typename T>
Matrix<T> slice_cols(const Matrix<T>& a, std::size_t begin, std::size_t count);
/// Writes src into dst starting at column `begin`.
template <typename T>
void set_cols(Matrix<T>& dst, std::size_t begin, const Matrix<T>& src);

template <typename T>
double frobenius_norm(const Matrix<T>& a);
template <typename T>
bool all_finite(const Matrix<T>& a);

/// |a - b| / max(|a|, |b|, 1e-8), the one error metric used across the project.
double relative_error(double a, double b);

/// Entry-wise maximum of relative_error over two equally shaped matrices.
template <typename T, typename U>
double max_relative_error(const Matrix<T>& a, const Matrix<U>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("max_relative_error: " + shape_string(a) + " vs " + shape_string(b));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double e = relative_error(static_cast<double>(a.data()[i]), static_cast<double>(b.data()[i]));
    if (e > worst) worst = e;
  }
  return worst;
}

/// Standard-normal entries times `stddev`, drawn in double then cast so that
/// float and double inputs from the same seed agree to rounding.
template <typename T>
Matrix<T> random_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                        double stddev = 1.0);

}  // namespace lightning
