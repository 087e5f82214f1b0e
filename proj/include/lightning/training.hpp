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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lightning/model.hpp"

namespace lightning {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;
  double clip_norm = 1.0;  // global gradient norm clip; 0 disables
};

class Optimizer {
 public:
  Optimizer(const TnlModel& model, OptimizerConfig config);

  /// Applies one update. Throws DomainError if any weight becomes non-finite.
  void step(TnlModel& model, TnlModel& grads);

  const OptimizerConfig& config() const { return config_; }
  std::size_t steps() const { return steps_; }

 private:
  OptimizerConfig config_;
  TnlModel m_, v_;
  std::size_t steps_ = 0;
};

/// One gradient step on `batch`; returns the loss before the update.
double train_step(TnlModel& model, Optimizer& opt, std::span<const Sequence> batch);

/// Byte-level tokenization (vocabulary 256).
std::vector<int> byte_tokens(std::string_view text);

/// Whole file as bytes. Throws InputError if missing or empty.
std::string read_corpus(const std::filesystem::path& path);

/// Deterministic English-like prose of exactly `bytes` bytes: Zipf-distributed
/// words from a fixed lexicon assembled into capitalized, punctuated sentences.
std::string synthetic_corpus(std::size_t bytes, std::uint64_t seed);

/// Draws random contiguous windows of `seq_len + 1` tokens.
class BatchSampler {
 public:
  BatchSampler(std::vector<int> tokens, std::size_t seq_len, std::size_t batch, std::uint64_t seed);
  std::vector<Sequence> next();

 private:
  std::vector<int> tokens_;
  std::size_t seq_len_, batch_;
  std::mt19937_64 rng_;
};

struct TrainConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  std::size_t steps = 2000;
  std::size_t seq_len = 64;
  std::size_t batch = 4;
  std::uint64_t seed = 1;
};

/// Byte-level defaults used by the toy run.
TrainConfig toy_train_config();

struct TrainResult {
  TnlModel model;
  std::vector<double> losses;  // losses[i] is the batch loss before step i+1
};

using StepCallback = std::function<void(std::size_t step, double loss)>;

TrainResult train_toy(std::string_view corpus, const TrainConfig& config,
                      const StepCallback& on_step = {});

/// Flat little-endian float64 tensors in `<stem>.bin` plus `<stem>.json`
/// listing name, shape, precision, byte offset and the model configuration.
void save_checkpoint(const TnlModel& model, const std::filesystem::path& stem);
TnlModel load_checkpoint(const std::filesystem::path& stem);

}  // namespace lightning
