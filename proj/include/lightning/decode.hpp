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
#include <span>
#include <vector>

#include "lightning/model.hpp"

namespace lightning {

/// Recurrent generation state: one d x d KV accumulator per layer and head.
/// Its size does not depend on how many tokens have been consumed.
struct DecodeState {
  std::vector<std::vector<MatrixD>> kv;  // [layer][head]
  std::size_t position = 0;

  std::size_t byte_size() const;
};

DecodeState init_decode_state(const TnlModel& model);

struct StepOutput {
  std::vector<double> logits;
  std::vector<double> probs;
};

/// Consumes one token and returns the next-token distribution. Equivalent to
/// the last row of model_forward over every token consumed so far.
StepOutput generate_step(const TnlModel& model, DecodeState& state, int token);

/// Feeds `prompt`, then samples `count` tokens at `temperature` (0 = greedy).
std::vector<int> generate(const TnlModel& model, std::span<const int> prompt, std::size_t count,
                          double temperature, std::uint64_t seed);

}  // namespace lightning
