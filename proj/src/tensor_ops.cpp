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

#include "lightning/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lightning {
namespace {

// Reduction-dimension block; keeps a 256-row panel of B resident in L2.
constexpr std::size_t kReductionBlock = 256;

template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
  T s0{}, s1{}, s2{}, s3{};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  for (; i < n; ++i) s0 += x[i] * y[i];
  return (s0 + s1) + (s2 + s3);
}

template <typename T>
void require_same_shape(const Matrix<T>& a, const Matrix<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a) + " and " +
                     shape_string(b) + " differ");
}

}  // namespace

template <typename T>
void gemm(Trans trans_a, Trans trans_b, T alpha, ConstMatrixView<T> a,
          ConstMatrixView<T> b, T beta, MatrixView<T> c) {
  const bool ta = trans_a == Trans::yes;
  const bool tb = trans_b == Trans::yes;
  const std::size_t m = ta ? a.cols : a.rows;
  const std::size_t k = ta ? a.rows : a.cols;
  const std::size_t kb = tb ? b.cols : b.rows;
  const std::size_t n = tb ? b.rows : b.cols;
  if (k != kb || c.rows != m || c.cols != n) {
    throw ShapeError("gemm: op(A) is " + std::to_string(m) + "x" + std::to_string(k) +
                     ", op(B) is " + std::to_string(kb) + "x" + std::to_string(n) +
                     ", C is " + std::to_string(c.rows) + "x" + std::to_string(c.cols));
  }

  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c.row(i);
    if (beta == T{0}) {
      std::fill(crow, crow + n, T{0});
    } else if (beta != T{1}) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (m == 0 || n == 0 || k == 0) return;

  if (!ta && !tb) {
    for (std::size_t k0 = 0; k0 < k; k0 += kReductionBlock) {
      const std::size_t k1 = std::min(k, k0 + kReductionBlock);
      for (std::size_t i = 0; i < m; ++i) {
        T* __restrict crow = c.row(i);
        const T* arow = a.row(i);
        for (std::size_t p = k0; p < k1; ++p) {
          const T aip = alpha * arow[p];
          const T* __restrict brow = b.row(p);
          for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
      }
    }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const T* arow = a.row(p);
      const T* __restrict brow = b.row(p);
      for (std::size_t i = 0; i < m; ++i) {
        const T aip = alpha * arow[i];
        T* __restrict crow = c.row(i);
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c.row(i);
      const T* arow = a.row(i);
      for (std::size_t j = 0; j < n; ++j) crow[j] += alpha * dot(arow, b.row(j), k);
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        T s{};
        for (std::size_t p = 0; p < k; ++p) s += a(p, i) * b(j, p);
        crow[j] += alpha * s;
      }
    }
  }
}

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_string(a) + " x " + shape_string(b));
  Matrix<T> c(a.rows(), b.cols());
  gemm(Trans::no, Trans::no, T{1}, a.view(), b.view(), T{0}, c.view());
  return c;
}

template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn: " + shape_string(a) + "^T x " + shape_string(b));
  Matrix<T> c(a.cols(), b.cols());
  gemm(Trans::yes, Trans::no, T{1}, a.view(), b.view(), T{0}, c.view());
  return c;
}

template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: " + shape_string(a) + " x " + shape_string(b) + "^T");
  Matrix<T> c(a.rows(), b.rows());
  gemm(Trans::no, Trans::yes, T{1}, a.view(), b.view(), T{0}, c.view());
  return c;
}

template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b) {
  require_same_shape(a, b, "hadamard");
  Matrix<T> c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];
  return c;
}

template <typename T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b) {
  require_same_shape(a, b, "add");
  Matrix<T> c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
  return c;
}

template <typename T>
Matrix<T> subtract(const Matrix<T>& a, const Matrix<T>& b) {
  require_same_shape(a, b, "subtract");
  Matrix<T> c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  return c;
}

template <typename T>
Matrix<T> scale(const Matrix<T>& a, T s) {
  Matrix<T> c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * s;
  return c;
}

template <typename T>
void axpy(T alpha, const Matrix<T>& x, Matrix<T>& y) {
  require_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] += alpha * x.data()[i];
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

void check_decay(double lambda) {
  if (!(lambda > 0.0) || lambda > 1.0 || !std::isfinite(lambda))
    throw DomainError("decay rate must lie in (0, 1], got " + std::to_string(lambda));
}

std::vector<double> decay_powers(double lambda, std::size_t count) {
  std::vector<double> p(count + 1);
  p[0] = 1.0;
  for (std::size_t i = 1; i <= count; ++i) p[i] = p[i - 1] * lambda;
  return p;
}

template <typename T>
Matrix<T> causal_decay_mask(std::size_t block, double lambda) {
  check_decay(lambda);
  if (block == 0) throw ShapeError("causal_decay_mask: block size must be >= 1");
  const auto pw = decay_powers(lambda, block);
  Matrix<T> m(block, block);
  for (std::size_t t = 0; t < block; ++t)
    for (std::size_t s = 0; s <= t; ++s) m(t, s) = static_cast<T>(pw[t - s]);
  return m;
}

template <typename T>
Matrix<T> diag_lambda(std::size_t block, double lambda) {
  check_decay(lambda);
  if (block == 0) throw ShapeError("diag_lambda: block size must be >= 1");
  const auto pw = decay_powers(lambda, block);
  Matrix<T> m(block, block);
  for (std::size_t i = 0; i < block; ++i) m(i, i) = static_cast<T>(pw[i + 1]);
  return m;
}

BlockLayout make_block_layout(std::size_t n, std::size_t block) {
  if (n == 0) throw ShapeError("block layout: sequence length must be >= 1");
  if (block == 0) throw ShapeError("block layout: block size must be >= 1");
  BlockLayout layout;
  layout.n = n;
  layout.block = block;
  layout.count = (n + block - 1) / block;
  layout.tail = n - (layout.count - 1) * block;
  return layout;
}

template <typename T>
BlockPartition<T> block_partition(const Matrix<T>& x, std::size_t block) {
  BlockPartition<T> out;
  out.layout = make_block_layout(x.rows(), block);
  out.blocks.reserve(out.layout.count);
  for (std::size_t t = 0; t < out.layout.count; ++t)
    out.blocks.push_back(slice_rows(x, out.layout.begin(t), out.layout.length(t)));
  return out;
}

template <typename T>
Matrix<T> concat_rows(std::span<const Matrix<T>> parts) {
  if (parts.empty()) return {};
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix<T> out(rows, cols);
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.data(), p.data() + p.size(), out.data() + at * cols);
    at += p.rows();
  }
  return out;
}

template <typename T>
Matrix<T> concat_cols(std::span<const Matrix<T>> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix<T> out(rows, cols);
  std::size_t at = 0;
  for (const auto& p : parts) {
    set_cols(out, at, p);
    at += p.cols();
  }
  return out;
}

template <typename T>
Matrix<T> slice_rows(const Matrix<T>& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) throw ShapeError("slice_rows: range exceeds matrix");
  Matrix<T> out(count, a.cols());
  std::copy(a.data() + begin * a.cols(), a.data() + (begin + count) * a.cols(), out.data());
  return out;
}

template <typename T>
Matrix<T> slice_cols(const Matrix<T>& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) throw ShapeError("slice_cols: range exceeds matrix");
  Matrix<T> out(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r)
    std::copy(a.data() + r * a.cols() + begin, a.data() + r * a.cols() + begin + count,
              out.data() + r * count);
  return out;
}

template <typename T>
void set_cols(Matrix<T>& dst, std::size_t begin, const Matrix<T>& src) {
  if (src.rows() != dst.rows() || begin + src.cols() > dst.cols())
    throw ShapeError("set_cols: " + shape_string(src) + " does not fit " + shape_string(dst));
  for (std::size_t r = 0; r < src.rows(); ++r)
    std::copy(src.data() + r * src.cols(), src.data() + (r + 1) * src.cols(),
              dst.data() + r * dst.cols() + begin);
}

template <typename T>
double frobenius_norm(const Matrix<T>& a) {
  double s = 0.0;
  for (T v : a.values()) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

template <typename T>
bool all_finite(const Matrix<T>& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](T v) { return std::isfinite(v); });
}

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

template <typename T>
Matrix<T> random_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                        double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix<T> m(rows, cols);
  for (auto& v : m.values()) v = static_cast<T>(dist(rng));
  return m;
}

#define LIGHTNING_INSTANTIATE(T)                                                         \
  template void gemm<T>(Trans, Trans, T, ConstMatrixView<T>, ConstMatrixView<T>, T,     \
                        MatrixView<T>);                                                 \
  template Matrix<T> matmul(const Matrix<T>&, const Matrix<T>&);                        \
  template Matrix<T> matmul_tn(const Matrix<T>&, const Matrix<T>&);                     \
  template Matrix<T> matmul_nt(const Matrix<T>&, const Matrix<T>&);                     \
  template Matrix<T> hadamard(const Matrix<T>&, const Matrix<T>&);                      \
  template Matrix<T> add(const Matrix<T>&, const Matrix<T>&);                           \
  template Matrix<T> subtract(const Matrix<T>&, const Matrix<T>&);                      \
  template Matrix<T> scale(const Matrix<T>&, T);                                        \
  template void axpy(T, const Matrix<T>&, Matrix<T>&);                                  \
  template Matrix<T> transpose(const Matrix<T>&);                                       \
  template Matrix<T> causal_decay_mask<T>(std::size_t, double);                         \
  template Matrix<T> diag_lambda<T>(std::size_t, double);                               \
  template BlockPartition<T> block_partition(const Matrix<T>&, std::size_t);            \
  template Matrix<T> concat_rows(std::span<const Matrix<T>>);                           \
  template Matrix<T> concat_cols(std::span<const Matrix<T>>);                           \
  template Matrix<T> slice_rows(const Matrix<T>&, std::size_t, std::size_t);            \
  template Matrix<T> slice_cols(const Matrix<T>&, std::size_t, std::size_t);            \
  template void set_cols(Matrix<T>&, std::size_t, const Matrix<T>&);                    \
  template double frobenius_norm(const Matrix<T>&);                                     \
  template bool all_finite(const Matrix<T>&);                                           \
  template Matrix<T> random_normal<T>(std::size_t, std::size_t, std::mt19937_64&, double);

LIGHTNING_INSTANTIATE(float)
LIGHTNING_INSTANTIATE(double)

#undef LIGHTNING_INSTANTIATE

}  // namespace lightning
