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
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lightning/matrix.hpp"

namespace lightning {

enum class KernelKind { left, right, lightning, lightning_decay, srmsnorm };

std::string to_string(KernelKind k);
KernelKind parse_kernel(const std::string& name);

enum class Pass { forward, backward };

std::string to_string(Pass p);

struct BenchConfig {
  std::vector<KernelKind> kernels{KernelKind::left, KernelKind::lightning};
  std::vector<std::size_t> n{1024, 2048, 4096, 8192, 16384};
  std::size_t d = 64;
  std::size_t block = 64;  // 0 = head dim
  double lambda = 0.99;    // used by every kernel except plain lightning (always 1)
  Precision precision = Precision::reference;
  std::size_t repeats = 3;
  std::uint64_t seed = 1;
  bool backward = true;

  /// Throws ConfigError on empty lists, zero sizes or f32 with a reference kernel.
  void validate() const;
};

struct TimingRecord {
  std::string kernel;
  std::string pass;
  std::string precision;
  std::size_t n = 0, d = 0, block = 0;
  double lambda = 1.0;
  std::size_t repeats = 0;
  double median_ns = 0.0;
  double per_token_ns = 0.0;
  std::size_t aux_bytes = 0;  // peak bytes allocated beyond inputs and outputs
};

using BenchProgress = std::function<void(const TimingRecord&)>;

/// One warm-up call, then the median of `repeats` timed calls per
/// (kernel, n, pass). Inputs are N(0,1) drawn from `seed`.
std::vector<TimingRecord> run_bench(const BenchConfig& config, const BenchProgress& progress = {});

/// Row-wise SRMSNorm throughput over an n x d matrix.
TimingRecord bench_srmsnorm(std::size_t n, std::size_t d, std::size_t repeats, std::uint64_t seed);

extern const std::vector<std::string> kBenchColumns;

void write_bench_csv(std::ostream& out, const std::vector<TimingRecord>& records);

}  // namespace lightning
