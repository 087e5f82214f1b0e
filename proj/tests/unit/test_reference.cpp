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

#include <cmath>

#include "doctest.h"
#include "lightning/reference.hpp"
#include "lightning/tensor_ops.hpp"
#include "test_support.hpp"

using namespace lightning;
using lightning::testing::attention_fd_grad;
using lightning::testing::brute_force_attention;
using lightning::testing::random_matrix;

namespace {

double sum_of(const MatrixD& m) {
  double s = 0.0;
  for (double x : m.values()) s += x;
  return s;
}

// Loss L = sum(O . W) so that dL/dO = W.
double weighted_output(const MatrixD& o, const MatrixD& w) { return sum_of(hadamard(o, w)); }

}  // namespace

TEST_CASE("left product hand cases") {
  const MatrixD q(2, 1, {1, 1});
  const MatrixD v(2, 1, {1, 2});
  CHECK(left_product_forward(q, q, v, 1.0) == MatrixD(2, 1, {1, 3}));
  CHECK(left_product_forward(q, q, v, 0.5) == MatrixD(2, 1, {1, 2.5}));

  const MatrixD q1(1, 3, {1, 2, 3});
  const MatrixD k1(1, 3, {0.5, -1, 2});
  const MatrixD v1(1, 3, {4, 5, 6});
  const double score = 0.5 - 2 + 6;
  CHECK(left_product_forward(q1, k1, v1) == MatrixD(1, 3, {4 * score, 5 * score, 6 * score}));
}

TEST_CASE("right product hand cases") {
  const MatrixD q(2, 1, {1, 1});
  const MatrixD v(2, 1, {1, 2});
  CHECK(right_product_forward(q, q, v, 1.0) == MatrixD(2, 1, {1, 3}));
  CHECK(right_product_forward(q, q, v, 0.5) == MatrixD(2, 1, {1, 2.5}));
  const MatrixD r = random_matrix(4, 3, 1);
  CHECK(right_product_forward(r, r, MatrixD(4, 3), 1.0) == MatrixD(4, 3));
}

TEST_CASE("both forwards match brute force and each other") {
  for (double lambda : {1.0, 0.99, 0.9, 0.5}) {
    for (std::size_t n : {1, 3, 17, 64, 130}) {
      for (std::size_t d : {1, 4, 16}) {
        const std::uint64_t seed = n * 131 + d;
        const MatrixD q = random_matrix(n, d, seed);
        const MatrixD k = random_matrix(n, d, seed + 1);
        const MatrixD v = random_matrix(n, d, seed + 2);
        const MatrixD left = left_product_forward(q, k, v, lambda);
        const MatrixD right = right_product_forward(q, k, v, lambda);
        CAPTURE(lambda);
        CAPTURE(n);
        CAPTURE(d);
        CHECK(max_relative_error(left, right) <= 1e-10);
        CHECK(max_relative_error(left, brute_force_attention(q, k, v, lambda)) <= 1e-10);
      }
    }
  }
}

TEST_CASE("reference backward hand case") {
  const MatrixD q(1, 1, {2}), k(1, 1, {3}), v(1, 1, {5}), d_out(1, 1, {1});
  const auto g = reference_backward(q, k, v, d_out, 1.0);
  CHECK(g.dq(0, 0) == 15.0);
  CHECK(g.dk(0, 0) == 10.0);
  CHECK(g.dv(0, 0) == 6.0);

  const MatrixD r = random_matrix(5, 3, 2);
  const auto z = reference_backward(r, r, r, MatrixD(5, 3), 0.7);
  CHECK(z.dq == MatrixD(5, 3));
  CHECK(z.dk == MatrixD(5, 3));
  CHECK(z.dv == MatrixD(5, 3));
}

TEST_CASE("reference backward matches finite differences") {
  const double h = 1e-5;
  std::uint64_t seed = 50;
  for (std::size_t n : {1u, 2u, 5u, 9u, 16u})
    for (std::size_t d : {1u, 3u, 8u})
      for (double lambda : {1.0, 0.9, 0.5}) {
        const MatrixD q = random_matrix(n, d, ++seed);
        const MatrixD k = random_matrix(n, d, ++seed);
        const MatrixD v = random_matrix(n, d, ++seed);
        const MatrixD w = random_matrix(n, d, ++seed);
        const auto g = reference_backward(q, k, v, w, lambda);
        CAPTURE(n);
        CAPTURE(d);
        CAPTURE(lambda);
        CHECK(max_relative_error(g.dq, attention_fd_grad(q, k, v, w, lambda, 0, h)) <= 1e-6);
        CHECK(max_relative_error(g.dk, attention_fd_grad(q, k, v, w, lambda, 1, h)) <= 1e-6);
        CHECK(max_relative_error(g.dv, attention_fd_grad(q, k, v, w, lambda, 2, h)) <= 1e-6);
      }
}

TEST_CASE("double-precision finite differences on a small instance") {
  const MatrixD q = random_matrix(4, 3, 1), k = random_matrix(4, 3, 2), v = random_matrix(4, 3, 3),
                w = random_matrix(4, 3, 4);
  const auto g = reference_backward(q, k, v, w, 0.8);
  const auto fv = [&](const MatrixD& x) { return weighted_output(left_product_forward(q, k, x, 0.8), w); };
  CHECK(frobenius_norm(subtract(g.dv, finite_difference_grads(fv, v, 1e-5))) <=
        1e-8 * frobenius_norm(g.dv));
}

TEST_CASE("left product backward agrees with the recurrent backward") {
  for (double lambda : {1.0, 0.9, 0.5}) {
    const std::size_t n = 150, d = 8;
    const MatrixD q = random_matrix(n, d, 1), k = random_matrix(n, d, 2),
                  v = random_matrix(n, d, 3), w = random_matrix(n, d, 4);
    const auto a = reference_backward(q, k, v, w, lambda);
    const auto b = left_product_backward(q, k, v, w, lambda);
    CHECK(max_relative_error(a.dq, b.dq) <= 1e-10);
    CHECK(max_relative_error(a.dk, b.dk) <= 1e-10);
    CHECK(max_relative_error(a.dv, b.dv) <= 1e-10);
  }
}

TEST_CASE("finite difference harness") {
  const MatrixD x = random_matrix(3, 4, 5);
  const auto ones = finite_difference_grads(sum_of, x, 1e-3);
  CHECK(max_relative_error(ones, MatrixD(3, 4, 1.0)) < 1e-10);

  const auto half_norm = [](const MatrixD& m) { return 0.5 * std::pow(frobenius_norm(m), 2); };
  CHECK(max_relative_error(finite_difference_grads(half_norm, x, 1e-4), x) < 1e-8);

  // sum(O) w.r.t. Q equals the backward with dO = ones.
  const MatrixD q = random_matrix(6, 3, 6), k = random_matrix(6, 3, 7), v = random_matrix(6, 3, 8);
  const auto g = reference_backward(q, k, v, MatrixD(6, 3, 1.0), 1.0);
  const auto fd = finite_difference_grads(
      [&](const MatrixD& m) { return sum_of(left_product_forward(m, k, v)); }, q, 1e-5);
  CHECK(max_relative_error(g.dq, fd) <= 1e-6);
  CHECK_THROWS_AS(finite_difference_grads(sum_of, x, 0.0), DomainError);
}

TEST_CASE("causality: perturbing row t touches only rows >= t") {
  const std::size_t n = 12, d = 4;
  const MatrixD q = random_matrix(n, d, 1), k = random_matrix(n, d, 2), v = random_matrix(n, d, 3);
  const MatrixD base = left_product_forward(q, k, v, 0.9);
  for (std::size_t t = 0; t < n; ++t) {
    MatrixD k2 = k, v2 = v;
    k2(t, 0) += 1.0;
    v2(t, 1) -= 1.0;
    for (const MatrixD& o : {left_product_forward(q, k2, v, 0.9), left_product_forward(q, k, v2, 0.9)}) {
      for (std::size_t r = 0; r < t; ++r)
        for (std::size_t c = 0; c < d; ++c) CHECK(o(r, c) == base(r, c));
      bool changed = false;
      for (std::size_t c = 0; c < d; ++c) changed = changed || o(t, c) != base(t, c);
      CHECK(changed);
    }
  }
}

TEST_CASE("oracles reject bad inputs") {
  CHECK_THROWS_AS(left_product_forward(MatrixD(3, 2), MatrixD(3, 3), MatrixD(3, 2)), ShapeError);
  CHECK_THROWS_AS(right_product_forward(MatrixD(3, 2), MatrixD(2, 2), MatrixD(3, 2)), ShapeError);
  CHECK_THROWS_AS(reference_backward(MatrixD(3, 2), MatrixD(3, 2), MatrixD(3, 2), MatrixD(2, 2)),
                  ShapeError);
  CHECK_THROWS_AS(left_product_forward(MatrixD(3, 2), MatrixD(3, 2), MatrixD(3, 2), 0.0),
                  DomainError);
}
