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

#include "lightning/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <ostream>
#include <random>

#include "lightning/layers.hpp"
#include "lightning/lightning.hpp"
#include "lightning/memory_probe.hpp"
#include "lightning/reference.hpp"
#include "lightning/tensor_ops.hpp"

namespace lightning {
namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_ns(F&& f) {
  const auto start = Clock::now();
  f();
  return std::chrono::duration<double, std::nano>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Runs `call` once under the memory probe (warm-up), then `repeats` timed
// calls. `call` returns the number of bytes it hands back to the caller.
template <typename F>
TimingRecord measure(std::size_t repeats, F&& call) {
  TimingRecord r;
  {
    MemoryProbe probe;
    const std::size_t kept = call();
    const std::size_t peak = probe.peak_bytes();
    r.aux_bytes = peak > kept ? peak - kept : 0;
  }
  std::vector<double> samples;
  for (std::size_t i = 0; i < repeats; ++i) samples.push_back(time_ns(call));
  r.median_ns = median(std::move(samples));
  r.repeats = repeats;
  return r;
}

template <typename T>
TimingRecord bench_one(KernelKind kind, Pass pass, const BenchConfig& cfg, std::size_t n,
                       std::mt19937_64& rng) {
  const std::size_t d = cfg.d;
  const Matrix<T> q = random_normal<T>(n, d, rng), k = random_normal<T>(n, d, rng),
                  v = random_normal<T>(n, d, rng), d_out = random_normal<T>(n, d, rng);
  AttentionConfig attn;
  attn.block_size = cfg.block;
  attn.lambda = kind == KernelKind::lightning ? 1.0 : cfg.lambda;
  const bool fwd = pass == Pass::forward;

  TimingRecord r;
  if constexpr (std::is_same_v<T, double>) {
    if (kind == KernelKind::left) {
      r = fwd ? measure(cfg.repeats, [&] { return left_product_forward(q, k, v, attn.lambda).bytes(); })
              : measure(cfg.repeats, [&] {
                  auto g = left_product_backward(q, k, v, d_out, attn.lambda);
                  return 3 * g.dq.bytes();
                });
    } else if (kind == KernelKind::right) {
      r = fwd ? measure(cfg.repeats, [&] { return right_product_forward(q, k, v, attn.lambda).bytes(); })
              : measure(cfg.repeats, [&] {
                  auto g = reference_backward(q, k, v, d_out, attn.lambda);
                  return 3 * g.dq.bytes();
                });
    }
  }
  if (kind == KernelKind::lightning) {
    r = fwd ? measure(cfg.repeats, [&] { return lightning_forward(q, k, v, attn).bytes(); })
            : measure(cfg.repeats, [&] {
                auto g = lightning_backward(q, k, v, d_out, attn);
                return 3 * g.dq.bytes();
              });
  } else if (kind == KernelKind::lightning_decay) {
    r = fwd ? measure(cfg.repeats, [&] { return lightning_forward_decay(q, k, v, attn).bytes(); })
            : measure(cfg.repeats, [&] {
                auto g = lightning_backward_decay(q, k, v, d_out, attn);
                return 3 * g.dq.bytes();
              });
  }
  r.kernel = to_string(kind);
  r.pass = to_string(pass);
  r.precision = to_string(precision_of<T>);
  r.n = n;
  r.d = d;
  r.block = attn.resolve_block(n, d);
  r.lambda = attn.lambda;
  r.per_token_ns = r.median_ns / static_cast<double>(n);
  return r;
}

}  // namespace

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::left: return "left";
    case KernelKind::right: return "right";
    case KernelKind::lightning: return "lightning";
    case KernelKind::lightning_decay: return "lightning-decay";
    case KernelKind::srmsnorm: return "srmsnorm";
  }
  return "?";
}

KernelKind parse_kernel(const std::string& name) {
  for (KernelKind k : {KernelKind::left, KernelKind::right, KernelKind::lightning,
                       KernelKind::lightning_decay, KernelKind::srmsnorm})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown kernel '" + name +
                    "' (expected left, right, lightning, lightning-decay or srmsnorm)");
}

std::string to_string(Pass p) { return p == Pass::forward ? "fwd" : "bwd"; }

void BenchConfig::validate() const {
  if (kernels.empty()) throw ConfigError("no kernels selected");
  if (n.empty()) throw ConfigError("no sequence lengths given");
  if (std::find(n.begin(), n.end(), 0u) != n.end()) throw ConfigError("sequence length 0");
  if (d == 0) throw ConfigError("head dimension must be positive");
  if (repeats == 0) throw ConfigError("repeats must be positive");
  check_decay(lambda);
  if (precision == Precision::working)
    for (KernelKind k : kernels)
      if (k == KernelKind::left || k == KernelKind::right)
        throw ConfigError("the " + to_string(k) + " reference kernel runs in f64 only");
}

std::vector<TimingRecord> run_bench(const BenchConfig& config, const BenchProgress& progress) {
  config.validate();
  std::vector<TimingRecord> out;
  for (KernelKind kind : config.kernels) {
    for (std::size_t n : config.n) {
      // Same seed per (kernel, n) so every kernel sees the same inputs.
      std::mt19937_64 rng(config.seed + n);
      if (kind == KernelKind::srmsnorm) {
        out.push_back(bench_srmsnorm(n, config.d, config.repeats, config.seed + n));
        if (progress) progress(out.back());
        continue;
      }
      for (Pass pass : {Pass::forward, Pass::backward}) {
        if (pass == Pass::backward && !config.backward) break;
        std::mt19937_64 pass_rng = rng;
        out.push_back(config.precision == Precision::working
                          ? bench_one<float>(kind, pass, config, n, pass_rng)
                          : bench_one<double>(kind, pass, config, n, pass_rng));
        if (progress) progress(out.back());
      }
    }
  }
  return out;
}

TimingRecord bench_srmsnorm(std::size_t n, std::size_t d, std::size_t repeats,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const MatrixD x = random_normal<double>(n, d, rng);
  const NormParams none;
  TimingRecord r = measure(repeats, [&] { return norm_forward(NormKind::srms, none, x).bytes(); });
  r.kernel = to_string(KernelKind::srmsnorm);
  r.pass = to_string(Pass::forward);
  r.precision = to_string(Precision::reference);
  r.n = n;
  r.d = d;
  r.block = 0;
  r.lambda = 1.0;
  r.per_token_ns = r.median_ns / static_cast<double>(n);
  return r;
}

const std::vector<std::string> kBenchColumns{"kernel", "pass",    "precision", "n",
                                             "d",      "B",       "lambda",    "repeats",
                                             "median_ns", "per_token_ns", "aux_bytes"};

void write_bench_csv(std::ostream& out, const std::vector<TimingRecord>& records) {
  for (std::size_t i = 0; i < kBenchColumns.size(); ++i)
    out << (i ? "," : "") << kBenchColumns[i];
  out << '\n';
  const auto flags = out.flags();
  for (const auto& r : records) {
    out << r.kernel << ',' << r.pass << ',' << r.precision << ',' << r.n << ',' << r.d << ','
        << r.block << ',' << std::setprecision(17) << r.lambda << ',' << r.repeats << ','
        << std::fixed << std::setprecision(1) << r.median_ns << ',' << std::setprecision(3)
        << r.per_token_ns << ',' << r.aux_bytes << '\n';
    out.flags(flags);
  }
}

}  // namespace lightning
