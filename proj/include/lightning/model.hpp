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

// Miniature TransNormerLLM: token embedding, L pre-norm blocks of
//   Y = X + GLA(Norm(X)),  Z = Y + SGLU(Norm(Y)),
// a final norm and a linear output head. Every operation has a hand-written
// backward, so training and gradient checks need no autodiff machinery.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lightning/layers.hpp"
#include "lightning/positional.hpp"

namespace lightning {

struct ModelConfig {
  std::size_t vocab = 256;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t d_ff = 128;
  std::size_t block_size = 0;  // attention block; 0 = head dim
  PeMode pe = PeMode::mix;
  bool decay_temperature = true;
  bool gate = true;
  GlaActivation gla_activation = GlaActivation::swish;
  GluActivation glu_activation = GluActivation::none;
  NormKind norm = NormKind::srms;
  double init_scale = 0.02;  // weights ~ N(0, (init_scale / sqrt(layers))^2)

  std::size_t head_dim() const { return d_model / heads; }
  /// Throws ConfigError on inconsistent sizes.
  void validate() const;
};

struct TnlLayer {
  NormParams norm1;  // before GLA
  GlaWeights gla;
  NormParams gla_norm;  // inside GLA, after attention
  LrpeParams lrpe;      // theta is empty on decay-only layers
  NormParams norm2;     // before SGLU
  SgluWeights sglu;
};

struct TnlModel {
  ModelConfig config;
  MatrixD embedding;  // vocab x d_model
  std::vector<TnlLayer> layers;
  NormParams final_norm;
  MatrixD head;  // d_model x vocab
  DecaySchedule schedule;
};

/// Randomly initialized model; identical seeds give identical weights.
TnlModel init_model(const ModelConfig& config, std::uint64_t seed);

/// Same shapes as `model`, all parameters zero. Used as a gradient buffer.
TnlModel zeros_like(const TnlModel& model);

struct ParamRef {
  std::string name;
  MatrixD* tensor;
};
struct ConstParamRef {
  std::string name;
  const MatrixD* tensor;
};

/// Every learnable tensor in a fixed order. Decay rates are frozen and are not
/// parameters.
std::vector<ParamRef> parameters(TnlModel& model);
std::vector<ConstParamRef> parameters(const TnlModel& model);
std::size_t parameter_count(const TnlModel& model);

/// GLA setup for 0-based layer index.
GlaSetup gla_setup(const TnlModel& model, std::size_t layer_index);

/// One pre-norm block applied to an n x d_model activation.
MatrixD tnl_block_forward(const TnlModel& model, std::size_t layer_index, const MatrixD& x);

/// Logits (n x vocab) for a token sequence. Throws InputError on ids >= vocab.
MatrixD model_forward(const TnlModel& model, std::span<const int> tokens);

/// A training example: inputs tokens[0..n) predict targets tokens[1..n].
using Sequence = std::vector<int>;

/// Mean next-token cross-entropy (nats) over every position of every sequence.
double model_loss(const TnlModel& model, std::span<const Sequence> batch);

/// Loss and its gradient with respect to every parameter (written to `grads`,
/// which must be shaped like the model; it is overwritten).
double model_loss_and_grads(const TnlModel& model, std::span<const Sequence> batch,
                            TnlModel& grads);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace lightning
