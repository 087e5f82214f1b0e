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

// Ground-truth causal linear attention, always in double precision.
//
// All routines take an optional decay rate lambda in (0, 1]; lambda = 1 is the
// plain causal form. The score of query t against key s is
// q_t . k_s * lambda^(t - s) for s <= t and zero otherwise.

#include <functional>

#include "lightning/matrix.hpp"

namespace lightning {

/// Gradients of a scalar loss with respect to the three attention inputs.
template <typename T>
struct GradBundle {
  Matrix<T> dq;
  Matrix<T> dk;
  Matrix<T> dv;
};

/// Throws ShapeError unless Q, K, V (and dO, when given) are all n x d, n >= 1.
template <typename T>
void check_attention_shapes(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                            const Matrix<T>* d_out = nullptr);

/// O = [(Q K^T) . M] V, quadratic in n. Rows are processed in chunks so the
/// score buffer is chunk x n rather than n x n.
MatrixD left_product_forward(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                             double lambda = 1.0);

/// kv_t = lambda kv_{t-1} + k_t v_t^T, o_t^T = q_t^T kv_t. Sequential in t.
MatrixD right_product_forward(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                              double lambda = 1.0);

/// Token-level recurrent backward:
///   dq_t = kv_t do_t, dk_t = dkv_t v_t, dv_t = dkv_t^T k_t,
///   dkv_n = q_n do_n^T, dkv_{t-1} = lambda dkv_t + q_{t-1} do_{t-1}^T.
GradBundle<double> reference_backward(const MatrixD& q, const MatrixD& k,
                                      const MatrixD& v, const MatrixD& d_out,
                                      double lambda = 1.0);

/// Backward of the left product, quadratic in n. Used as the baseline in
/// benchmarks and as a second oracle for reference_backward.
GradBundle<double> left_product_backward(const MatrixD& q, const MatrixD& k,
                                         const MatrixD& v, const MatrixD& d_out,
                                         double lambda = 1.0);

using ScalarFunction = std::function<double(const MatrixD&)>;

/// Central differences (f(X + h E_ij) - f(X - h E_ij)) / 2h for every entry.
MatrixD finite_difference_grads(const ScalarFunction& f, const MatrixD& x, double h);

}  // namespace lightning
