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
#include <span>
#include <vector>

#include "lightning/layers.hpp"

namespace lightning {

/// Invocation counts for the simulated collectives.
struct CollectiveCounters {
  std::size_t all_reduce = 0;            // sums of per-worker partial outputs
  std::size_t norm_stat_all_reduce = 0;  // sums of per-row norm statistics
  std::size_t reduced_bytes = 0;         // payload summed over all collectives
};

/// Worker i holds columns [i*w, (i+1)*w) of Wv and Wu and the same rows of Wo.
struct SgluShardSet {
  std::size_t workers = 1;
  std::vector<SgluWeights> shards;
};

/// Head-aligned split: worker i owns heads [i*H/P, (i+1)*H/P), i.e. the
/// matching column slices of Wq, Wk, Wv, Wu and row slice of Wo.
struct GlaShardSet {
  std::size_t workers = 1;
  std::size_t heads = 1;
  std::vector<GlaWeights> shards;

  std::size_t heads_per_worker() const { return heads / workers; }
};

/// Throws ConfigError when d_ff is not divisible by `workers`.
SgluShardSet shard_weights(const SgluWeights& w, std::size_t workers);
/// Throws ConfigError when the head count is not divisible by `workers`.
GlaShardSet shard_weights(const GlaWeights& w, std::size_t heads, std::size_t workers);

SgluWeights reconstruct(const SgluShardSet& s);
GlaWeights reconstruct(const GlaShardSet& s);

/// Element-wise sum of equally shaped partials, in worker order.
MatrixD all_reduce(std::span<const MatrixD> partials, CollectiveCounters& counters);

MatrixD sglu_parallel_forward(const MatrixD& x, const SgluShardSet& s, GluActivation act,
                              CollectiveCounters& counters);

/// Where the norm inside GLA sees its input. `full_row` matches gla_forward by
/// reducing per-row statistics across workers; `per_shard` normalizes each
/// worker's slice on its own, which is not equivalent for more than one worker.
enum class NormPlacement { full_row, per_shard };

MatrixD gla_parallel_forward(const MatrixD& x, const GlaShardSet& s, const GlaSetup& setup,
                             CollectiveCounters& counters,
                             NormPlacement placement = NormPlacement::full_row);

}  // namespace lightning
