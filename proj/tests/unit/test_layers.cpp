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
#include "lightning/layers.hpp"
#include "lightning/tensor_ops.hpp"
#include "test_support.hpp"

using namespace lightning;
using lightning::testing::gla_oracle;
using lightning::testing::naive_swish;
using lightning::testing::naive_matmul;
using lightning::testing::random_matrix;

namespace {

double row_norm(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::sqrt(s);
}

GlaWeights random_gla(std::size_t dm, std::uint64_t seed, double scale = 0.4) {
  return {random_matrix(dm, dm, seed, scale), random_matrix(dm, dm, seed + 1, scale),
          random_matrix(dm, dm, seed + 2, scale), random_matrix(dm, dm, seed + 3, scale),
          random_matrix(dm, dm, seed + 4, scale)};
}

}  // namespace

TEST_CASE("srmsnorm hand cases") {
  const std::vector<double> x{3.0, 4.0};
  const auto y = srmsnorm(x);
  CHECK(y[0] == doctest::Approx(0.848528137423857).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(1.131370849898476).epsilon(1e-14));
  CHECK(row_norm(y) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  const std::vector<double> fixed{1.0, -1.0, 1.0, -1.0};
  CHECK(srmsnorm(fixed) == fixed);

  const auto zero = srmsnorm(std::vector<double>(5, 0.0));
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("srmsnorm row norm is sqrt(d) above the guard") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(-6.0, 6.0);
  for (std::size_t d : {1u, 2u, 7u, 64u, 513u}) {
    for (int trial = 0; trial < 50; ++trial) {
      auto x = random_matrix(1, d, 100 + trial);
      const double target = std::pow(10.0, mag(rng));
      const double n = row_norm(x.values());
      for (auto& v : x.values()) v *= target / n;
      if (row_norm(x.values()) < 1e-6) continue;
      const auto y = srmsnorm(x.values());
      CHECK(std::abs(row_norm(y) - std::sqrt(static_cast<double>(d))) <= 1e-10);
    }
  }
}

TEST_CASE("swish values") {
  CHECK(swish(0.0) == 0.0);
  CHECK(swish(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
  CHECK(swish(-2.0) == doctest::Approx(-2.0 / (1.0 + std::exp(2.0))).epsilon(1e-14));
  CHECK(swish(40.0) == doctest::Approx(40.0).epsilon(1e-15));
  for (double x : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    const double h = 1e-6;
    CHECK(swish_grad(x) == doctest::Approx((swish(x + h) - swish(x - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("norm kinds") {
  const MatrixD x = random_matrix(4, 6, 3);
  for (NormKind kind : {NormKind::srms, NormKind::rms, NormKind::layer}) {
    const auto params = make_norm_params(kind, 6);
    const MatrixD y = norm_forward(kind, params, x);
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(row_norm(y.row(r)) == doctest::Approx(std::sqrt(6.0)).epsilon(kind == NormKind::layer ? 1e-4 : 1e-12));
      if (kind == NormKind::layer) {
        double mean = 0.0;
        for (double v : y.row(r)) mean += v;
        CHECK(std::abs(mean) < 1e-12);
      }
    }
    CHECK(parse_norm_kind(to_string(kind)) == kind);
  }
  CHECK(make_norm_params(NormKind::srms, 6).gain.empty());
  CHECK_THROWS_AS(parse_norm_kind("batchnorm"), ConfigError);
}

TEST_CASE("sglu hand case and zero gate") {
  const MatrixD x(1, 2, {1.0, 2.0});
  SgluWeights w{MatrixD::identity(2), MatrixD::identity(2), MatrixD(2, 1, {1.0, 1.0})};
  CHECK(sglu_forward(x, w)(0, 0) == 5.0);
  w.wu.fill(0.0);
  CHECK(sglu_forward(x, w)(0, 0) == 0.0);
}

TEST_CASE("sglu matches entry-wise oracle exactly") {
  const MatrixD x = random_matrix(7, 5, 1);
  const SgluWeights w{random_matrix(5, 9, 2), random_matrix(5, 9, 3), random_matrix(9, 5, 4)};
  const MatrixD a = naive_matmul(x, w.wv), b = naive_matmul(x, w.wu);
  MatrixD mixed(7, 9);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 9; ++j) mixed(i, j) = a(i, j) * b(i, j);
  CHECK(sglu_forward(x, w) == naive_matmul(mixed, w.wo));
}

TEST_CASE("gla n=1 degenerates to a scaled value row") {
  const DecaySchedule schedule(2, 2);
  GlaSetup s;
  s.heads = 2;
  s.schedule = &schedule;
  s.gate = false;
  const MatrixD x = random_matrix(1, 8, 21);
  const GlaWeights w = random_gla(8, 30);
  const MatrixD out = gla_forward(x, w, s);

  MatrixD q = naive_matmul(x, w.wq), k = naive_matmul(x, w.wk);
  const MatrixD v = naive_matmul(x, w.wv);
  MatrixD attn(1, 8);
  for (std::size_t h = 0; h < 2; ++h) {
    double score = 0.0;
    for (std::size_t c = 0; c < 4; ++c) score += naive_swish(q(0, 4 * h + c)) * naive_swish(k(0, 4 * h + c));
    for (std::size_t c = 0; c < 4; ++c) attn(0, 4 * h + c) = score * v(0, 4 * h + c);
  }
  const auto normed = srmsnorm(attn.values());
  const MatrixD expect = naive_matmul(MatrixD(1, 8, {normed[0], normed[1], normed[2], normed[3],
                                                      normed[4], normed[5], normed[6], normed[7]}),
                                      w.wo);
  CHECK(max_relative_error(out, expect) <= 1e-12);
}

TEST_CASE("gla gate neutrality") {
  const DecaySchedule schedule(2, 3);
  GlaSetup s;
  s.heads = 2;
  s.layer = 2;
  s.schedule = &schedule;
  const MatrixD x = random_matrix(9, 6, 5);
  GlaWeights w = random_gla(6, 40);
  // With X having a constant column c, Wu routing that column to every output
  // gives U = ones.
  MatrixD xc = x;
  for (std::size_t r = 0; r < 9; ++r) xc(r, 5) = 1.0;
  w.wu.fill(0.0);
  for (std::size_t c = 0; c < 6; ++c) w.wu(5, c) = 1.0;
  const MatrixD gated = gla_forward(xc, w, s);
  s.gate = false;
  CHECK(max_relative_error(gated, gla_forward(xc, w, s)) == 0.0);
}

TEST_CASE("gla equals composed head-by-head oracle") {
  const DecaySchedule schedule(2, 2);
  const LrpeParams lrpe = LrpeParams::geometric(4);
  for (LayerPe pe : {LayerPe::lrpe_d, LayerPe::decay_only}) {
    for (std::size_t layer : {1u, 2u}) {
      GlaSetup s;
      s.heads = 2;
      s.layer = layer;
      s.schedule = &schedule;
      s.pe = pe;
      s.lrpe = &lrpe;
      s.block_size = 5;
      const MatrixD x = random_matrix(32, 8, 60 + layer);
      const GlaWeights w = random_gla(8, 70 + layer);
      CAPTURE(layer);
      CHECK(max_relative_error(gla_forward(x, w, s), gla_oracle(x, w, s)) <= 1e-8);
    }
  }
}

TEST_CASE("gla rejects mismatched shapes") {
  const DecaySchedule schedule(2, 1);
  GlaSetup s;
  s.heads = 2;
  s.schedule = &schedule;
  const GlaWeights w = random_gla(8, 1);
  CHECK_THROWS_AS(gla_forward(random_matrix(3, 6, 1), w, s), ShapeError);
  s.heads = 3;
  CHECK_THROWS_AS(gla_forward(random_matrix(3, 8, 1), w, s), ShapeError);
}

TEST_CASE("activation parsing round trip") {
  for (auto a : {GlaActivation::swish, GlaActivation::one_plus_elu, GlaActivation::none})
    CHECK(parse_gla_activation(to_string(a)) == a);
  for (auto a : {GluActivation::none, GluActivation::swish})
    CHECK(parse_glu_activation(to_string(a)) == a);
  CHECK_THROWS_AS(parse_gla_activation("relu"), ConfigError);
}
