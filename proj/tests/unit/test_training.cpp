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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lightning/decode.hpp"
#include "lightning/training.hpp"

using namespace lightning;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig c = toy_train_config();
  c.model.d_model = 16;
  c.model.heads = 2;
  c.model.d_ff = 16;
  c.seq_len = 16;
  c.batch = 2;
  c.steps = 6;
  c.optimizer.lr = 1e-2;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lightning_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("sgd update is w - lr g") {
  ModelConfig mc;
  mc.vocab = 5;
  mc.d_model = 4;
  mc.heads = 1;
  mc.layers = 1;
  mc.d_ff = 4;
  TnlModel m = init_model(mc, 1);
  const TnlModel before = m;
  TnlModel g = zeros_like(m);
  g.head(1, 2) = 0.25;
  g.embedding(3, 0) = -0.5;
  Optimizer opt(m, {OptimizerKind::sgd, 0.1, 0.9, 0.98, 1e-8, 0.0});
  opt.step(m, g);
  CHECK(m.head(1, 2) == before.head(1, 2) - 0.1 * 0.25);
  CHECK(m.embedding(3, 0) == before.embedding(3, 0) + 0.1 * 0.5);
  CHECK(m.head(0, 0) == before.head(0, 0));
  CHECK(opt.steps() == 1);
}

TEST_CASE("first adam step moves by lr times the gradient sign") {
  ModelConfig mc;
  mc.vocab = 5;
  mc.d_model = 4;
  mc.heads = 1;
  mc.layers = 1;
  mc.d_ff = 4;
  TnlModel m = init_model(mc, 1);
  const TnlModel before = m;
  TnlModel g = zeros_like(m);
  g.head(0, 1) = 3.0;
  g.head(2, 2) = -1e-3;
  Optimizer opt(m, {OptimizerKind::adam, 1e-3, 0.9, 0.98, 1e-12, 0.0});
  opt.step(m, g);
  CHECK(m.head(0, 1) - before.head(0, 1) == doctest::Approx(-1e-3).epsilon(1e-9));
  CHECK(m.head(2, 2) - before.head(2, 2) == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(m.head(1, 1) == before.head(1, 1));
}

TEST_CASE("gradient clipping bounds the sgd step") {
  ModelConfig mc;
  mc.vocab = 5;
  mc.d_model = 4;
  mc.heads = 1;
  mc.layers = 1;
  mc.d_ff = 4;
  TnlModel m = init_model(mc, 1);
  const TnlModel before = m;
  TnlModel g = zeros_like(m);
  g.head(0, 0) = 30.0;
  g.head(0, 1) = 40.0;
  Optimizer opt(m, {OptimizerKind::sgd, 1.0, 0.9, 0.98, 1e-8, 1.0});
  opt.step(m, g);
  CHECK(m.head(0, 0) - before.head(0, 0) == doctest::Approx(-0.6));
  CHECK(m.head(0, 1) - before.head(0, 1) == doctest::Approx(-0.8));
}

TEST_CASE("non-finite weights are rejected") {
  ModelConfig mc;
  mc.vocab = 5;
  mc.d_model = 4;
  mc.heads = 1;
  mc.layers = 1;
  mc.d_ff = 4;
  TnlModel m = init_model(mc, 1);
  TnlModel g = zeros_like(m);
  g.head(0, 0) = std::numeric_limits<double>::infinity();
  Optimizer opt(m, {OptimizerKind::sgd, 1.0, 0.9, 0.98, 1e-8, 0.0});
  CHECK_THROWS_AS(opt.step(m, g), DomainError);
  CHECK_THROWS_AS(Optimizer(m, {OptimizerKind::adam, 0.0}), ConfigError);
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_THROWS_AS(parse_optimizer("lbfgs"), ConfigError);
}

TEST_CASE("synthetic corpus is seeded, sized and printable") {
  const std::string a = synthetic_corpus(5000, 3), b = synthetic_corpus(5000, 3);
  CHECK(a == b);
  CHECK(a.size() == 5000);
  CHECK(a != synthetic_corpus(5000, 4));
  for (char ch : a) CHECK((ch == '\n' || (ch >= 32 && ch < 127)));
  const auto tokens = byte_tokens("A\xff");
  CHECK(tokens == std::vector<int>{65, 255});
}

TEST_CASE("batch sampler windows") {
  std::vector<int> tokens(100);
  for (int i = 0; i < 100; ++i) tokens[i] = i;
  BatchSampler s(tokens, 9, 3, 1);
  for (int round = 0; round < 20; ++round)
    for (const auto& seq : s.next()) {
      REQUIRE(seq.size() == 10);
      for (std::size_t i = 1; i < seq.size(); ++i) CHECK(seq[i] == seq[i - 1] + 1);
    }
  CHECK_THROWS_AS(BatchSampler(std::vector<int>(5), 9, 1, 1), InputError);
}

TEST_CASE("corpus file errors") {
  CHECK_THROWS_AS(read_corpus(scratch("does_not_exist.txt")), InputError);
  const fs::path empty = scratch("empty.txt");
  std::ofstream(empty).close();
  CHECK_THROWS_AS(read_corpus(empty), InputError);
}

TEST_CASE("training is deterministic and starts near ln 256") {
  const std::string corpus = synthetic_corpus(20000, 2);
  const TrainResult a = train_toy(corpus, tiny_config());
  const TrainResult b = train_toy(corpus, tiny_config());
  CHECK(a.losses == b.losses);
  CHECK(a.losses.front() == doctest::Approx(std::log(256.0)).epsilon(1e-2));
  TrainConfig other = tiny_config();
  other.seed = 2;
  CHECK(train_toy(corpus, other).losses != a.losses);
}

TEST_CASE("short run lowers the loss") {
  TrainConfig c = tiny_config();
  c.steps = 80;
  const TrainResult r = train_toy(synthetic_corpus(50000, 5), c);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    head += r.losses[i];
    tail += r.losses[r.losses.size() - 1 - i];
  }
  CHECK(tail < 0.8 * head);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  TrainConfig c = tiny_config();
  c.model.pe = PeMode::lrpe_all;
  c.model.norm = NormKind::layer;
  const TrainResult r = train_toy(synthetic_corpus(4000, 1), c);
  const fs::path stem = scratch("ckpt");
  save_checkpoint(r.model, stem);
  const TnlModel loaded = load_checkpoint(stem);
  const auto a = parameters(r.model), b = parameters(loaded);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(*a[i].tensor == *b[i].tensor);
  }
  CHECK(loaded.config.norm == NormKind::layer);
  const std::vector<int> prompt{72, 105};
  CHECK(generate(loaded, prompt, 8, 0.0, 1) == generate(r.model, prompt, 8, 0.0, 1));

  std::ofstream(fs::path(stem) += ".json") << "{\"format\": \"other\"}";
  CHECK_THROWS_AS(load_checkpoint(stem), InputError);
  std::ofstream(fs::path(stem) += ".json") << "not json";
  CHECK_THROWS_AS(load_checkpoint(stem), InputError);
  CHECK_THROWS_AS(load_checkpoint(scratch("missing")), InputError);
}
