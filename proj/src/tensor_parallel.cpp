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

#include "lightning/tensor_parallel.hpp"

#include <algorithm>
#include <cmath>

#include "lightning/tensor_ops.hpp"

namespace lightning {
namespace {

MatrixD rows_of(const MatrixD& m, std::size_t begin, std::size_t count) {
  return slice_rows(m, begin, count);
}

MatrixD concat_rows_of(const std::vector<MatrixD>& parts) {
  std::size_t rows = 0;
  for (const auto& p : parts) rows += p.rows();
  MatrixD out(rows, parts.front().cols());
  std::size_t r0 = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < p.rows(); ++r)
      std::copy_n(p.row(r).data(), p.cols(), out.row(r0 + r).data());
    r0 += p.rows();
  }
  return out;
}

MatrixD concat_cols_of(const std::vector<MatrixD>& parts) {
  std::size_t cols = 0;
  for (const auto& p : parts) cols += p.cols();
  MatrixD out(parts.front().rows(), cols);
  std::size_t c0 = 0;
  for (const auto& p : parts) {
    set_cols(out, c0, p);
    c0 += p.cols();
  }
  return out;
}

// Element-wise sum in worker order; callers account for the collective.
MatrixD sum_partials(std::span<const MatrixD> partials) {
  if (partials.empty()) throw ShapeError("all_reduce over zero workers");
  MatrixD sum = partials.front();
  for (std::size_t i = 1; i < partials.size(); ++i) {
    if (partials[i].rows() != sum.rows() || partials[i].cols() != sum.cols())
      throw ShapeError("all_reduce partials differ in shape");
    auto acc = sum.values();
    const auto src = partials[i].values();
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += src[j];
  }
  return sum;
}

NormParams slice_norm(const NormParams& p, std::size_t begin, std::size_t count) {
  NormParams out;
  if (!p.gain.empty()) out.gain = slice_cols(p.gain, begin, count);
  if (!p.bias.empty()) out.bias = slice_cols(p.bias, begin, count);
  return out;
}

// Normalizes each worker's slice of the attention output with statistics of
// the full row, gathered by one reduction of per-row partial sums.
std::vector<MatrixD> full_row_norm(const std::vector<MatrixD>& slices, NormKind kind,
                                   const NormParams& params, CollectiveCounters& counters) {
  const std::size_t n = slices.front().rows();
  std::size_t width = 0;
  for (const auto& s : slices) width += s.cols();

  // stats(r, 0) = sum of x, stats(r, 1) = sum of x^2 over the worker's columns.
  std::vector<MatrixD> partial_stats;
  for (const auto& s : slices) {
    MatrixD stats(n, 2);
    for (std::size_t r = 0; r < n; ++r)
      for (double v : s.row(r)) {
        stats(r, 0) += v;
        stats(r, 1) += v * v;
      }
    partial_stats.push_back(std::move(stats));
  }
  const MatrixD stats = sum_partials(partial_stats);
  ++counters.norm_stat_all_reduce;
  counters.reduced_bytes += stats.bytes() * partial_stats.size();

  const double d = static_cast<double>(width);
  std::vector<double> shift(n, 0.0), inv(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (kind == NormKind::layer) {
      shift[r] = stats(r, 0) / d;
      const double var = std::max(stats(r, 1) / d - shift[r] * shift[r], 0.0);
      inv[r] = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    } else {
      inv[r] = std::sqrt(d) / std::max(std::sqrt(stats(r, 1)), kSrmsEpsilon);
    }
  }

  std::vector<MatrixD> out;
  std::size_t c0 = 0;
  for (const auto& s : slices) {
    const NormParams local = slice_norm(params, c0, s.cols());
    MatrixD y(n, s.cols());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < s.cols(); ++c) {
        double v = (s(r, c) - shift[r]) * inv[r];
        if (kind != NormKind::srms) v *= local.gain(0, c);
        if (kind == NormKind::layer) v += local.bias(0, c);
        y(r, c) = v;
      }
    out.push_back(std::move(y));
    c0 += s.cols();
  }
  return out;
}

}  // namespace

SgluShardSet shard_weights(const SgluWeights& w, std::size_t workers) {
  const std::size_t ff = w.wv.cols();
  if (workers == 0 || ff % workers != 0)
    throw ConfigError("d_ff " + std::to_string(ff) + " is not divisible by " +
                      std::to_string(workers) + " workers");
  if (w.wu.cols() != ff || w.wo.rows() != ff)
    throw ShapeError("SGLU weights disagree on d_ff: " + shape_string(w.wv) + ", " +
                     shape_string(w.wu) + ", " + shape_string(w.wo));
  const std::size_t width = ff / workers;
  SgluShardSet s{workers, {}};
  for (std::size_t i = 0; i < workers; ++i)
    s.shards.push_back({slice_cols(w.wv, i * width, width), slice_cols(w.wu, i * width, width),
                        rows_of(w.wo, i * width, width)});
  return s;
}

GlaShardSet shard_weights(const GlaWeights& w, std::size_t heads, std::size_t workers) {
  if (workers == 0 || heads == 0 || heads % workers != 0)
    throw ConfigError(std::to_string(heads) + " heads are not divisible by " +
                      std::to_string(workers) + " workers");
  const std::size_t d = w.wq.cols();
  if (d % heads != 0) throw ShapeError("GLA width is not a multiple of the head count");
  const std::size_t width = d / workers;
  GlaShardSet s{workers, heads, {}};
  for (std::size_t i = 0; i < workers; ++i) {
    const std::size_t c0 = i * width;
    s.shards.push_back({slice_cols(w.wq, c0, width), slice_cols(w.wk, c0, width),
                        slice_cols(w.wv, c0, width), slice_cols(w.wu, c0, width),
                        rows_of(w.wo, c0, width)});
  }
  return s;
}

SgluWeights reconstruct(const SgluShardSet& s) {
  std::vector<MatrixD> wv, wu, wo;
  for (const auto& sh : s.shards) {
    wv.push_back(sh.wv);
    wu.push_back(sh.wu);
    wo.push_back(sh.wo);
  }
  return {concat_cols_of(wv), concat_cols_of(wu), concat_rows_of(wo)};
}

GlaWeights reconstruct(const GlaShardSet& s) {
  std::vector<MatrixD> wq, wk, wv, wu, wo;
  for (const auto& sh : s.shards) {
    wq.push_back(sh.wq);
    wk.push_back(sh.wk);
    wv.push_back(sh.wv);
    wu.push_back(sh.wu);
    wo.push_back(sh.wo);
  }
  return {concat_cols_of(wq), concat_cols_of(wk), concat_cols_of(wv), concat_cols_of(wu),
          concat_rows_of(wo)};
}

MatrixD all_reduce(std::span<const MatrixD> partials, CollectiveCounters& counters) {
  MatrixD sum = sum_partials(partials);
  ++counters.all_reduce;
  counters.reduced_bytes += sum.bytes() * partials.size();
  return sum;
}

MatrixD sglu_parallel_forward(const MatrixD& x, const SgluShardSet& s, GluActivation act,
                              CollectiveCounters& counters) {
  std::vector<MatrixD> partials;
  partials.reserve(s.shards.size());
  for (const auto& shard : s.shards) partials.push_back(sglu_forward(x, shard, act));
  return all_reduce(partials, counters);
}

MatrixD gla_parallel_forward(const MatrixD& x, const GlaShardSet& s, const GlaSetup& setup,
                             CollectiveCounters& counters, NormPlacement placement) {
  if (setup.heads != s.heads) throw ConfigError("GLA setup and shards disagree on head count");
  const std::size_t local_heads = s.heads_per_worker();
  const std::size_t width = s.shards.front().wq.cols();
  const std::size_t head_dim = width / local_heads;
  static const NormParams kNoParams;
  const NormParams& norm_params = setup.norm_params ? *setup.norm_params : kNoParams;

  std::vector<MatrixD> attention, gates;
  for (std::size_t i = 0; i < s.workers; ++i) {
    const GlaWeights& w = s.shards[i];
    const MatrixD q = activate(setup.activation, matmul(x, w.wq));
    const MatrixD k = activate(setup.activation, matmul(x, w.wk));
    attention.push_back(
        multi_head_attention(q, k, matmul(x, w.wv), i * local_heads, head_dim, setup));
    if (setup.gate) gates.push_back(matmul(x, w.wu));
  }

  std::vector<MatrixD> normed;
  if (placement == NormPlacement::full_row) {
    normed = full_row_norm(attention, setup.norm, norm_params, counters);
  } else {
    for (std::size_t i = 0; i < s.workers; ++i)
      normed.push_back(norm_forward(setup.norm, slice_norm(norm_params, i * width, width),
                                    attention[i]));
  }

  std::vector<MatrixD> partials;
  for (std::size_t i = 0; i < s.workers; ++i) {
    const MatrixD gated = setup.gate ? hadamard(normed[i], gates[i]) : normed[i];
    partials.push_back(matmul(gated, s.shards[i].wo));
  }
  return all_reduce(partials, counters);
}

}  // namespace lightning
