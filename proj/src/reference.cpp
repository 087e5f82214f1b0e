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

#include "lightning/reference.hpp"

#include <algorithm>
#include <string>

#include "lightning/tensor_ops.hpp"

namespace lightning {
namespace {

constexpr std::size_t kRowChunk = 64;

// Multiplies the chunk of scores for query rows [r0, r0 + rows) by the causal
// decay mask: lambda^(t - s) on and below the diagonal, zero above it.
void apply_mask(MatrixView<double> scores, std::size_t r0, const std::vector<double>& pw) {
  for (std::size_t i = 0; i < scores.rows; ++i) {
    const std::size_t t = r0 + i;
    double* row = scores.row(i);
    for (std::size_t s = 0; s <= t; ++s) row[s] *= pw[t - s];
    std::fill(row + t + 1, row + scores.cols, 0.0);
  }
}

}  // namespace

template <typename T>
void check_attention_shapes(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                            const Matrix<T>* d_out) {
  if (q.rows() == 0 || q.cols() == 0)
    throw ShapeError("attention inputs must be non-empty, got Q " + shape_string(q));
  auto same = [&](const Matrix<T>& m) { return m.rows() == q.rows() && m.cols() == q.cols(); };
  if (!same(k) || !same(v) || (d_out != nullptr && !same(*d_out))) {
    std::string msg = "attention shape mismatch: Q " + shape_string(q) + ", K " +
                      shape_string(k) + ", V " + shape_string(v);
    if (d_out != nullptr) msg += ", dO " + shape_string(*d_out);
    throw ShapeError(msg);
  }
}

template void check_attention_shapes(const MatrixF&, const MatrixF&, const MatrixF&,
                                      const MatrixF*);
template void check_attention_shapes(const MatrixD&, const MatrixD&, const MatrixD&,
                                     const MatrixD*);

MatrixD left_product_forward(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                             double lambda) {
  check_attention_shapes(q, k, v);
  check_decay(lambda);
  const std::size_t n = q.rows();
  const std::size_t d = q.cols();
  const auto pw = decay_powers(lambda, n);

  MatrixD out(n, d);
  MatrixD scores(std::min(kRowChunk, n), n);
  for (std::size_t r0 = 0; r0 < n; r0 += kRowChunk) {
    const std::size_t rows = std::min(kRowChunk, n - r0);
    const std::size_t keys = r0 + rows;  // causal: later keys are masked anyway
    auto s = scores.view(0, 0, rows, keys);
    gemm(Trans::no, Trans::yes, 1.0, q.view(r0, 0, rows, d), k.view(0, 0, keys, d), 0.0, s);
    apply_mask(s, r0, pw);
    gemm(Trans::no, Trans::no, 1.0, ConstMatrixView<double>(s), v.view(0, 0, keys, d), 0.0,
         out.view(r0, 0, rows, d));
  }
  return out;
}

MatrixD right_product_forward(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                              double lambda) {
  check_attention_shapes(q, k, v);
  check_decay(lambda);
  const std::size_t n = q.rows();
  const std::size_t d = q.cols();
  MatrixD kv(d, d);
  MatrixD out(n, d);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) kv(i, j) = lambda * kv(i, j) + k(t, i) * v(t, j);
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += q(t, i) * kv(i, j);
      out(t, j) = s;
    }
  }
  return out;
}

GradBundle<double> reference_backward(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                                      const MatrixD& d_out, double lambda) {
  check_attention_shapes(q, k, v, &d_out);
  check_decay(lambda);
  const std::size_t n = q.rows();
  const std::size_t d = q.cols();
  GradBundle<double> g{MatrixD(n, d), MatrixD(n, d), MatrixD(n, d)};

  MatrixD kv(d, d);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) kv(i, j) = lambda * kv(i, j) + k(t, i) * v(t, j);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += kv(i, j) * d_out(t, j);
      g.dq(t, i) = s;
    }
  }

  MatrixD dkv(d, d);
  for (std::size_t t = n; t-- > 0;) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        dkv(i, j) = lambda * dkv(i, j) + q(t, i) * d_out(t, j);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += dkv(i, j) * v(t, j);
      g.dk(t, i) = s;
    }
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += k(t, i) * dkv(i, j);
      g.dv(t, j) = s;
    }
  }
  return g;
}

GradBundle<double> left_product_backward(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                                         const MatrixD& d_out, double lambda) {
  check_attention_shapes(q, k, v, &d_out);
  check_decay(lambda);
  const std::size_t n = q.rows();
  const std::size_t d = q.cols();
  const auto pw = decay_powers(lambda, n);
  GradBundle<double> g{MatrixD(n, d), MatrixD(n, d), MatrixD(n, d)};

  MatrixD scores(std::min(kRowChunk, n), n);
  for (std::size_t r0 = 0; r0 < n; r0 += kRowChunk) {
    const std::size_t rows = std::min(kRowChunk, n - r0);
    const std::size_t keys = r0 + rows;
    auto s = scores.view(0, 0, rows, keys);
    const auto q_rows = q.view(r0, 0, rows, d);
    const auto do_rows = d_out.view(r0, 0, rows, d);

    // P = (dO V^T) . M feeds dQ and dK.
    gemm(Trans::no, Trans::yes, 1.0, do_rows, v.view(0, 0, keys, d), 0.0, s);
    apply_mask(s, r0, pw);
    gemm(Trans::no, Trans::no, 1.0, ConstMatrixView<double>(s), k.view(0, 0, keys, d), 0.0,
         g.dq.view(r0, 0, rows, d));
    gemm(Trans::yes, Trans::no, 1.0, ConstMatrixView<double>(s), q_rows, 1.0,
         g.dk.view(0, 0, keys, d));

    // S = (Q K^T) . M feeds dV.
    gemm(Trans::no, Trans::yes, 1.0, q_rows, k.view(0, 0, keys, d), 0.0, s);
    apply_mask(s, r0, pw);
    gemm(Trans::yes, Trans::no, 1.0, ConstMatrixView<double>(s), do_rows, 1.0,
         g.dv.view(0, 0, keys, d));
  }
  return g;
}

MatrixD finite_difference_grads(const ScalarFunction& f, const MatrixD& x, double h) {
  if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
  MatrixD grad(x.rows(), x.cols());
  MatrixD probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(probe);
    probe.data()[i] = orig - h;
    const double down = f(probe);
    probe.data()[i] = orig;
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace lightning
