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
#include <set>

#include "doctest.h"
#include "lightning/model.hpp"
#include "lightning/tensor_ops.hpp"
#include "test_support.hpp"

using namespace lightning;
using lightning::testing::gla_oracle;
using lightning::testing::naive_matmul;
using lightning::testing::random_matrix;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.vocab = 11;
  c.d_model = 16;
  c.heads = 2;
  c.layers = 2;
  c.d_ff = 12;
  c.block_size = 3;
  c.init_scale = 0.5;
  return c;
}

std::vector<Sequence> small_batch() {
  return {{1, 4, 2, 9, 0, 3, 3, 7}, {10, 5, 6, 1, 8}};
}

// Worst element-wise relative error between analytic gradients and a
// five-point central difference of the loss, across every parameter.
double gradient_check(const ModelConfig& config, std::uint64_t seed) {
  TnlModel model = init_model(config, seed);
  const auto batch = small_batch();
  TnlModel grads = zeros_like(model);
  model_loss_and_grads(model, batch, grads);

  const double h = 1e-4;
  double worst = 0.0;
  auto analytic = parameters(grads);
  auto params = parameters(model);
  REQUIRE(analytic.size() == params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].tensor->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      auto at = [&](double delta) {
        values[i] = saved + delta;
        return model_loss(model, batch);
      };
      const double fd = ((at(-2 * h) - at(2 * h)) + 8 * (at(h) - at(-h))) / (12 * h);
      values[i] = saved;
      const double g = analytic[p].tensor->values()[i];
      const double err = relative_error(g, fd);
      if (err > worst) worst = err;
      if (err > 1e-4) {  // report the first offender
        MESSAGE(params[p].name << "[" << i << "] analytic " << g << " fd " << fd);
        return err;
      }
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.d_model = 18;
  c.heads = 2;  // head dim 9 is odd
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.pe = PeMode::decay_only;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("initialization is seeded and names are unique") {
  const TnlModel a = init_model(small_config(), 3), b = init_model(small_config(), 3);
  const TnlModel c = init_model(small_config(), 4);
  CHECK(a.embedding == b.embedding);
  CHECK_FALSE(a.embedding == c.embedding);
  const auto params = parameters(a);
  std::set<std::string> names;
  for (const auto& p : params) names.insert(p.name);
  CHECK(names.size() == params.size());
  CHECK(names.count("layers.0.gla.theta") == 1);  // mix: first layer uses LRPE-d
  CHECK(names.count("layers.1.gla.theta") == 0);
  CHECK(parameter_count(a) > 0);
}

TEST_CASE("untrained loss is near ln V") {
  ModelConfig c = small_config();
  c.vocab = 256;
  c.init_scale = 0.02;
  const TnlModel m = init_model(c, 1);
  const std::vector<Sequence> batch{{72, 101, 108, 108, 111, 32, 119, 111, 114, 108, 100}};
  CHECK(model_loss(m, batch) == doctest::Approx(std::log(256.0)).epsilon(1e-2));
}

TEST_CASE("zero weights make a block the identity") {
  TnlModel m = init_model(small_config(), 2);
  for (auto& p : parameters(m))
    if (p.name.rfind("layers.0.", 0) == 0 && p.name.find("theta") == std::string::npos)
      p.tensor->fill(0.0);
  const MatrixD x = random_matrix(5, 16, 9);
  CHECK(tnl_block_forward(m, 0, x) == x);
}

TEST_CASE("block matches composed oracle") {
  const TnlModel m = init_model(small_config(), 5);
  const MatrixD x = random_matrix(16, 16, 12);
  for (std::size_t l = 0; l < 2; ++l) {
    const TnlLayer& layer = m.layers[l];
    auto norm_rows = [](const MatrixD& a) {
      MatrixD out(a.rows(), a.cols());
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const double scale =
            std::sqrt(static_cast<double>(a.cols())) / lightning::testing::oracle_row_norm(a.row(r));
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) * scale;
      }
      return out;
    };
    const MatrixD y = add(x, gla_oracle(norm_rows(x), layer.gla, gla_setup(m, l)));
    const MatrixD h2 = norm_rows(y);
    const MatrixD a = naive_matmul(h2, layer.sglu.wv), b = naive_matmul(h2, layer.sglu.wu);
    const MatrixD z = add(y, naive_matmul(hadamard(a, b), layer.sglu.wo));
    CAPTURE(l);
    CHECK(max_relative_error(tnl_block_forward(m, l, x), z) <= 1e-8);
  }
}

TEST_CASE("model forward validates tokens") {
  const TnlModel m = init_model(small_config(), 1);
  const std::vector<int> bad{1, 2, 11};
  CHECK_THROWS_AS(model_forward(m, bad), InputError);
  const std::vector<int> negative{-1};
  CHECK_THROWS_AS(model_forward(m, negative), InputError);
  const std::vector<Sequence> short_batch{{3}};
  CHECK_THROWS_AS(model_loss(m, short_batch), InputError);
  const std::vector<int> ok{0, 10};
  CHECK(model_forward(m, ok).rows() == 2);
}

TEST_CASE("model is causal") {
  const TnlModel m = init_model(small_config(), 6);
  const std::vector<int> a{1, 2, 3, 4, 5, 6}, b{1, 2, 3, 9, 9, 9};
  const MatrixD la = model_forward(m, a), lb = model_forward(m, b);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < la.cols(); ++c) CHECK(la(r, c) == lb(r, c));
}

TEST_CASE("full-model gradient check") {
  CHECK(gradient_check(small_config(), 7) <= 1e-4);
}

TEST_CASE("gradient check across ablation settings") {
  struct Variant {
    const char* name;
    void (*apply)(ModelConfig&);
  };
  const Variant variants[] = {
      {"lrpe-d", [](ModelConfig& c) { c.pe = PeMode::lrpe_all; }},
      {"decay-only", [](ModelConfig& c) { c.pe = PeMode::decay_only; }},
      {"no gate", [](ModelConfig& c) { c.gate = false; }},
      {"1+elu", [](ModelConfig& c) { c.gla_activation = GlaActivation::one_plus_elu; }},
      {"no phi", [](ModelConfig& c) { c.gla_activation = GlaActivation::none; }},
      {"swish glu", [](ModelConfig& c) { c.glu_activation = GluActivation::swish; }},
      {"rmsnorm", [](ModelConfig& c) { c.norm = NormKind::rms; }},
      {"layernorm", [](ModelConfig& c) { c.norm = NormKind::layer; }},
      {"no temperature", [](ModelConfig& c) { c.decay_temperature = false; }},
  };
  for (const auto& v : variants) {
    ModelConfig c = small_config();
    c.d_model = 8;
    c.d_ff = 6;
    v.apply(c);
    CAPTURE(v.name);
    CHECK(gradient_check(c, 13) <= 1e-4);
  }
}

TEST_CASE("softmax") {
  const std::vector<double> logits{1000.0, 1000.0, 1000.0 + std::log(2.0)};
  const auto p = softmax(logits);
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[2] == doctest::Approx(0.5));
}
