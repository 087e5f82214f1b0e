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

#include "doctest.h"
#include "lightning/tensor_ops.hpp"
#include "lightning/tensor_parallel.hpp"
#include "test_support.hpp"

using namespace lightning;
using lightning::testing::random_matrix;

namespace {

SgluWeights random_sglu(std::size_t d, std::size_t ff, std::uint64_t seed) {
  return {random_matrix(d, ff, seed), random_matrix(d, ff, seed + 1), random_matrix(ff, d, seed + 2)};
}

GlaWeights random_gla(std::size_t d, std::uint64_t seed) {
  return {random_matrix(d, d, seed, 0.4), random_matrix(d, d, seed + 1, 0.4),
          random_matrix(d, d, seed + 2, 0.4), random_matrix(d, d, seed + 3, 0.4),
          random_matrix(d, d, seed + 4, 0.4)};
}

struct GlaFixture {
  DecaySchedule schedule{4, 3};
  LrpeParams lrpe = LrpeParams::geometric(4);
  NormParams norm;
  GlaSetup setup;

  explicit GlaFixture(NormKind kind = NormKind::srms, LayerPe pe = LayerPe::lrpe_d) {
    norm = make_norm_params(kind, 16);
    if (!norm.gain.empty()) norm.gain = random_matrix(1, 16, 90, 1.0);
    if (!norm.bias.empty()) norm.bias = random_matrix(1, 16, 91, 1.0);
    setup.heads = 4;
    setup.layer = 2;
    setup.schedule = &schedule;
    setup.pe = pe;
    setup.lrpe = &lrpe;
    setup.block_size = 5;
    setup.norm = kind;
    setup.norm_params = &norm;
  }
};

}  // namespace

TEST_CASE("sglu shards reconstruct bit-exactly") {
  const SgluWeights w = random_sglu(6, 8, 1);
  for (std::size_t p : {1u, 2u, 4u, 8u}) {
    const SgluShardSet s = shard_weights(w, p);
    CHECK(s.shards.size() == p);
    const SgluWeights back = reconstruct(s);
    CHECK(back.wv == w.wv);
    CHECK(back.wu == w.wu);
    CHECK(back.wo == w.wo);
  }
  const SgluShardSet one = shard_weights(w, 1);
  CHECK(one.shards[0].wv == w.wv);
  CHECK_THROWS_AS(shard_weights(w, 3), ConfigError);
  CHECK_THROWS_AS(shard_weights(w, 0), ConfigError);
}

TEST_CASE("two-way split of a four-column weight") {
  const SgluWeights w{random_matrix(3, 4, 1), random_matrix(3, 4, 2), random_matrix(4, 3, 3)};
  const SgluShardSet s = shard_weights(w, 2);
  CHECK(s.shards[0].wv.cols() == 2);
  CHECK(s.shards[1].wv(2, 1) == w.wv(2, 3));
  CHECK(s.shards[1].wo(0, 2) == w.wo(2, 2));
}

TEST_CASE("sglu hand case across two workers") {
  const MatrixD x(1, 2, {1.0, 2.0});
  const SgluWeights w{MatrixD::identity(2), MatrixD::identity(2), MatrixD(2, 1, {1.0, 1.0})};
  const SgluShardSet s = shard_weights(w, 2);
  CHECK(sglu_forward(x, s.shards[0])(0, 0) == 1.0);
  CHECK(sglu_forward(x, s.shards[1])(0, 0) == 4.0);
  CollectiveCounters counters;
  CHECK(sglu_parallel_forward(x, s, GluActivation::none, counters)(0, 0) == 5.0);
  CHECK(counters.all_reduce == 1);
}

TEST_CASE("sharded sglu equals unsharded") {
  const MatrixD x = random_matrix(9, 6, 4);
  const SgluWeights w = random_sglu(6, 8, 5);
  const MatrixD reference = sglu_forward(x, w);
  for (std::size_t p : {1u, 2u, 4u}) {
    for (GluActivation act : {GluActivation::none, GluActivation::swish}) {
      CollectiveCounters counters;
      const MatrixD out = sglu_parallel_forward(x, shard_weights(w, p), act, counters);
      CAPTURE(p);
      if (act == GluActivation::none) {
        if (p == 1) CHECK(out == reference);
        CHECK(max_relative_error(out, reference) <= 1e-12);
      } else {
        CHECK(max_relative_error(out, sglu_forward(x, w, act)) <= 1e-12);
      }
      CHECK(counters.all_reduce == 1);
      CHECK(counters.norm_stat_all_reduce == 0);
    }
  }
}

TEST_CASE("gla shards are head aligned") {
  const GlaWeights w = random_gla(16, 10);
  const GlaShardSet s = shard_weights(w, 4, 2);
  CHECK(s.heads_per_worker() == 2);
  CHECK(s.shards[1].wq.cols() == 8);
  const GlaWeights back = reconstruct(s);
  CHECK(back.wq == w.wq);
  CHECK(back.wo == w.wo);
  CHECK_THROWS_AS(shard_weights(w, 4, 3), ConfigError);
}

TEST_CASE("sharded gla equals unsharded") {
  const MatrixD x = random_matrix(23, 16, 20);
  const GlaWeights w = random_gla(16, 30);
  for (NormKind kind : {NormKind::srms, NormKind::rms, NormKind::layer}) {
    for (LayerPe pe : {LayerPe::lrpe_d, LayerPe::decay_only}) {
      GlaFixture f(kind, pe);
      const MatrixD reference = gla_forward(x, w, f.setup);
      for (std::size_t p : {1u, 2u, 4u}) {
        CollectiveCounters counters;
        const MatrixD out = gla_parallel_forward(x, shard_weights(w, 4, p), f.setup, counters);
        CAPTURE(p);
        CAPTURE(to_string(kind));
        CHECK(max_relative_error(out, reference) <= 1e-10);
        CHECK(counters.all_reduce == 1);
        CHECK(counters.norm_stat_all_reduce == 1);
      }
    }
  }
}

TEST_CASE("ungated gla shards") {
  GlaFixture f;
  f.setup.gate = false;
  const MatrixD x = random_matrix(7, 16, 2);
  const GlaWeights w = random_gla(16, 3);
  CollectiveCounters counters;
  CHECK(max_relative_error(gla_parallel_forward(x, shard_weights(w, 4, 4), f.setup, counters),
                           gla_forward(x, w, f.setup)) <= 1e-10);
}

TEST_CASE("norm must see the full row") {
  GlaFixture f;
  const MatrixD x = random_matrix(12, 16, 40);
  const GlaWeights w = random_gla(16, 50);
  const MatrixD reference = gla_forward(x, w, f.setup);
  CollectiveCounters counters;
  const MatrixD one = gla_parallel_forward(x, shard_weights(w, 4, 1), f.setup, counters,
                                           NormPlacement::per_shard);
  CHECK(max_relative_error(one, reference) <= 1e-12);
  const MatrixD split = gla_parallel_forward(x, shard_weights(w, 4, 2), f.setup, counters,
                                             NormPlacement::per_shard);
  CHECK(max_relative_error(split, reference) > 1e-3);
}

TEST_CASE("zero input gives zero on every worker") {
  GlaFixture f;
  const GlaWeights w = random_gla(16, 60);
  CollectiveCounters counters;
  const MatrixD out = gla_parallel_forward(MatrixD(5, 16), shard_weights(w, 4, 4), f.setup, counters);
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("all_reduce sums in worker order") {
  const std::vector<MatrixD> parts{MatrixD(1, 2, {1.0, 2.0}), MatrixD(1, 2, {10.0, 20.0}),
                                   MatrixD(1, 2, {100.0, 200.0})};
  CollectiveCounters c;
  CHECK(all_reduce(parts, c) == MatrixD(1, 2, {111.0, 222.0}));
  CHECK(c.all_reduce == 1);
  CHECK(c.reduced_bytes == 3 * 2 * sizeof(double));
  const std::vector<MatrixD> bad{MatrixD(1, 2), MatrixD(2, 1)};
  CHECK_THROWS_AS(all_reduce(bad, c), ShapeError);
  CHECK_THROWS_AS(all_reduce({}, c), ShapeError);
}
