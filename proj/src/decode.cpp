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

#include "lightning/decode.hpp"

#include <algorithm>
#include <random>

#include "lightning/tensor_ops.hpp"

namespace lightning {
namespace {

MatrixD gla_step(const MatrixD& x, const GlaWeights& w, const GlaSetup& setup,
                 std::vector<MatrixD>& kv, std::size_t position) {
  const std::size_t width = w.wq.cols();
  const std::size_t head_dim = width / setup.heads;
  const MatrixD q = activate(setup.activation, matmul(x, w.wq));
  const MatrixD k = activate(setup.activation, matmul(x, w.wk));
  const MatrixD v = matmul(x, w.wv);

  MatrixD attention(1, width);
  for (std::size_t h = 0; h < setup.heads; ++h) {
    MatrixD qh = slice_cols(q, h * head_dim, head_dim);
    MatrixD kh = slice_cols(k, h * head_dim, head_dim);
    if (setup.pe == LayerPe::lrpe_d) {
      qh = apply_lrpe(qh, *setup.lrpe, position);
      kh = apply_lrpe(kh, *setup.lrpe, position);
    }
    const double lambda = setup.schedule->lambda(h + 1, setup.layer);
    MatrixD& state = kv[h];
    // kv <- lambda kv + k^T v
    gemm<double>(Trans::yes, Trans::no, 1.0, kh.view(), slice_cols(v, h * head_dim, head_dim).view(),
                 lambda, state.view());
    set_cols(attention, h * head_dim, matmul(qh, state));
  }
  static const NormParams kNoParams;
  MatrixD out = norm_forward(setup.norm, setup.norm_params ? *setup.norm_params : kNoParams,
                             attention);
  if (setup.gate) out = hadamard(out, matmul(x, w.wu));
  return matmul(out, w.wo);
}

}  // namespace

std::size_t DecodeState::byte_size() const {
  std::size_t bytes = sizeof(position);
  for (const auto& layer : kv)
    for (const auto& m : layer) bytes += m.bytes();
  return bytes;
}

DecodeState init_decode_state(const TnlModel& model) {
  const std::size_t d = model.config.head_dim();
  DecodeState s;
  s.kv.assign(model.layers.size(), std::vector<MatrixD>(model.config.heads, MatrixD(d, d)));
  return s;
}

StepOutput generate_step(const TnlModel& model, DecodeState& state, int token) {
  if (token < 0 || static_cast<std::size_t>(token) >= model.config.vocab)
    throw InputError("token id " + std::to_string(token) + " outside vocabulary of " +
                     std::to_string(model.config.vocab));
  if (state.kv.size() != model.layers.size())
    throw ShapeError("decode state does not match the model");
  const NormKind kind = model.config.norm;
  MatrixD x = slice_rows(model.embedding, static_cast<std::size_t>(token), 1);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const TnlLayer& layer = model.layers[l];
    const MatrixD h1 = norm_forward(kind, layer.norm1, x);
    const MatrixD y =
        add(x, gla_step(h1, layer.gla, gla_setup(model, l), state.kv[l], state.position));
    x = add(y, sglu_forward(norm_forward(kind, layer.norm2, y), layer.sglu,
                            model.config.glu_activation));
  }
  const MatrixD logits = matmul(norm_forward(kind, model.final_norm, x), model.head);
  ++state.position;
  StepOutput out;
  out.logits.assign(logits.values().begin(), logits.values().end());
  out.probs = softmax(out.logits);
  return out;
}

std::vector<int> generate(const TnlModel& model, std::span<const int> prompt, std::size_t count,
                          double temperature, std::uint64_t seed) {
  if (prompt.empty()) throw InputError("generation needs a non-empty prompt");
  std::mt19937_64 rng(seed);
  DecodeState state = init_decode_state(model);
  StepOutput step;
  for (int t : prompt) step = generate_step(model, state, t);
  std::vector<int> out;
  for (std::size_t i = 0; i < count; ++i) {
    int next = 0;
    if (temperature <= 0.0) {
      next = static_cast<int>(std::max_element(step.logits.begin(), step.logits.end()) -
                              step.logits.begin());
    } else {
      std::vector<double> scaled(step.logits);
      for (double& v : scaled) v /= temperature;
      const auto p = softmax(scaled);
      next = std::discrete_distribution<int>(p.begin(), p.end())(rng);
    }
    out.push_back(next);
    step = generate_step(model, state, next);
  }
  return out;
}

}  // namespace lightning
