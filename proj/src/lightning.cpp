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

#include "lightning/lightning.hpp"

#include <algorithm>
#include <optional>
#include <vector>

#include "lightning/tensor_ops.hpp"

namespace lightning {
namespace {

thread_local KernelFault current_fault = KernelFault::none;

// Masks for the full block and, when n % B != 0, for the shorter tail block.
template <typename T>
class MaskSet {
 public:
  MaskSet(const BlockLayout& layout, double lambda)
      : full_(causal_decay_mask<T>(layout.block, lambda)) {
    if (layout.tail != layout.block) tail_ = causal_decay_mask<T>(layout.tail, lambda);
  }
  const Matrix<T>& for_length(std::size_t b) const {
    return b == full_.rows() ? full_ : *tail_;
  }

 private:
  Matrix<T> full_;
  std::optional<Matrix<T>> tail_;
};

// On-chip working set: one block of each streamed operand plus a score tile.
template <typename T>
struct Workspace {
  Workspace(std::size_t block, std::size_t d, bool backward)
      : q(block, d), k(block, d), v(block, d), scaled(block, d), scores(block, block),
        d_out(backward ? block : 0, d), out(block, d), state(d) {}

  Matrix<T> q, k, v, scaled, scores, d_out, out;
  KvState<T> state;
};

template <typename T>
MatrixView<T> rows_of(Matrix<T>& m, std::size_t b) {
  return m.view(0, 0, b, m.cols());
}

template <typename T>
void load_block(const Matrix<T>& src, std::size_t r0, std::size_t b, Matrix<T>& dst) {
  std::copy(src.data() + r0 * src.cols(), src.data() + (r0 + b) * src.cols(), dst.data());
}

template <typename T>
void store_block(const Matrix<T>& src, std::size_t b, Matrix<T>& dst, std::size_t r0) {
  std::copy(src.data(), src.data() + b * src.cols(), dst.data() + r0 * dst.cols());
}

// dst[0:b] = diag(factor(i)) * src[0:b], factor in double.
template <typename T, typename F>
void scale_rows(const Matrix<T>& src, std::size_t b, Matrix<T>& dst, F factor) {
  const std::size_t d = src.cols();
  for (std::size_t i = 0; i < b; ++i) {
    const T f = static_cast<T>(factor(i));
    const T* s = src.data() + i * d;
    T* o = dst.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) o[j] = f * s[j];
  }
}

template <typename T>
void apply_mask(MatrixView<T> scores, const Matrix<T>& mask) {
  for (std::size_t i = 0; i < scores.rows; ++i) {
    T* row = scores.row(i);
    const T* m = mask.data() + i * mask.cols();
    for (std::size_t j = 0; j < scores.cols; ++j) row[j] *= m[j];
  }
}

template <typename T>
void scale_in_place(Matrix<T>& m, T s) {
  for (auto& x : m.values()) x *= s;
}

template <typename T>
struct Prepared {
  BlockLayout layout;
  std::vector<double> powers;  // lambda^0 .. lambda^B
};

template <typename T>
Prepared<T> prepare(const Matrix<T>& q, const AttentionConfig& cfg) {
  check_decay(cfg.lambda);
  const std::size_t block = cfg.resolve_block(q.rows(), q.cols());
  return {make_block_layout(q.rows(), block), decay_powers(cfg.lambda, block)};
}

// One implementation serves both variants. Without decay it performs exactly
// the plain algorithm's operations; with decay it adds the Lambda scalings.
template <typename T, bool kDecay>
Matrix<T> forward_impl(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                       const AttentionConfig& cfg) {
  check_attention_shapes(q, k, v);
  const auto [layout, pw] = prepare(q, cfg);
  const std::size_t d = q.cols();
  const MaskSet<T> masks(layout, cfg.lambda);
  Workspace<T> ws(layout.block, d, false);
  Matrix<T>& kv = ws.state.kv;
  Matrix<T> out(layout.n, d);

  for (std::size_t t = 0; t < layout.count; ++t) {
    const std::size_t r0 = layout.begin(t);
    const std::size_t b = layout.length(t);
    load_block(q, r0, b, ws.q);
    load_block(k, r0, b, ws.k);
    load_block(v, r0, b, ws.v);
    auto qb = rows_of(ws.q, b);
    auto kb = rows_of(ws.k, b);
    auto vb = rows_of(ws.v, b);
    auto ob = rows_of(ws.out, b);
    auto s = ws.scores.view(0, 0, b, b);

    // O_intra = [(Q_t K_t^T) . M] V_t
    gemm<T>(Trans::no, Trans::yes, T{1}, qb, kb, T{0}, s);
    apply_mask(s, masks.for_length(b));
    gemm<T>(Trans::no, Trans::no, T{1}, s, vb, T{0}, ob);

    // O_inter = Lambda Q_t KV, then KV <- lambda^b KV + (lambda^b Lambda^-1 K_t)^T V_t
    if constexpr (kDecay) {
      scale_rows(ws.q, b, ws.scaled, [&](std::size_t i) { return pw[i + 1]; });
      gemm<T>(Trans::no, Trans::no, T{1}, rows_of(ws.scaled, b), kv.view(), T{1}, ob);
      scale_in_place(kv, static_cast<T>(pw[b]));
      scale_rows(ws.k, b, ws.scaled, [&](std::size_t i) { return pw[b - 1 - i]; });
      gemm<T>(Trans::yes, Trans::no, T{1}, rows_of(ws.scaled, b), vb, T{1}, kv.view());
    } else {
      gemm<T>(Trans::no, Trans::no, T{1}, qb, kv.view(), T{1}, ob);
      gemm<T>(Trans::yes, Trans::no, T{1}, kb, vb, T{1}, kv.view());
    }
    store_block(ws.out, b, out, r0);
  }
  return out;
}

template <typename T, bool kDecay>
GradBundle<T> backward_impl(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                            const Matrix<T>& d_out, const AttentionConfig& cfg) {
  check_attention_shapes(q, k, v, &d_out);
  const auto [layout, pw] = prepare(q, cfg);
  const std::size_t n = layout.n;
  const std::size_t d = q.cols();
  const MaskSet<T> masks(layout, cfg.lambda);
  Workspace<T> ws(layout.block, d, true);
  Matrix<T>& kv = ws.state.kv;
  Matrix<T>& dkv = ws.state.dkv;
  const T dkv_sign = current_fault == KernelFault::flip_dkv_update_sign ? T{-1} : T{1};
  GradBundle<T> g{Matrix<T>(n, d), Matrix<T>(n, d), Matrix<T>(n, d)};

  for (std::size_t t = 0; t < layout.count; ++t) {
    const std::size_t r0 = layout.begin(t);
    const std::size_t b = layout.length(t);
    load_block(k, r0, b, ws.k);
    load_block(v, r0, b, ws.v);
    load_block(d_out, r0, b, ws.d_out);
    auto kb = rows_of(ws.k, b);
    auto vb = rows_of(ws.v, b);
    auto dob = rows_of(ws.d_out, b);
    auto dqb = rows_of(ws.out, b);
    auto s = ws.scores.view(0, 0, b, b);

    // dQ_intra = [(dO_t V_t^T) . M] K_t
    gemm<T>(Trans::no, Trans::yes, T{1}, dob, vb, T{0}, s);
    apply_mask(s, masks.for_length(b));
    gemm<T>(Trans::no, Trans::no, T{1}, s, kb, T{0}, dqb);

    // dQ_inter = Lambda dO_t KV^T, then advance KV exactly as in the forward pass.
    if constexpr (kDecay) {
      scale_rows(ws.d_out, b, ws.scaled, [&](std::size_t i) { return pw[i + 1]; });
      gemm<T>(Trans::no, Trans::yes, T{1}, rows_of(ws.scaled, b), kv.view(), T{1}, dqb);
      scale_in_place(kv, static_cast<T>(pw[b]));
      scale_rows(ws.k, b, ws.scaled, [&](std::size_t i) { return pw[b - 1 - i]; });
      gemm<T>(Trans::yes, Trans::no, T{1}, rows_of(ws.scaled, b), vb, T{1}, kv.view());
    } else {
      gemm<T>(Trans::no, Trans::yes, T{1}, dob, kv.view(), T{1}, dqb);
      gemm<T>(Trans::yes, Trans::no, T{1}, kb, vb, T{1}, kv.view());
    }
    store_block(ws.out, b, g.dq, r0);
  }

  // Reverse sweep. The inter-block terms of block t read dKV accumulated from
  // blocks t+1..T only; block t is folded into dKV last.
  for (std::size_t t = layout.count; t-- > 0;) {
    const std::size_t r0 = layout.begin(t);
    const std::size_t b = layout.length(t);
    load_block(q, r0, b, ws.q);
    load_block(k, r0, b, ws.k);
    load_block(v, r0, b, ws.v);
    load_block(d_out, r0, b, ws.d_out);
    auto qb = rows_of(ws.q, b);
    auto kb = rows_of(ws.k, b);
    auto vb = rows_of(ws.v, b);
    auto dob = rows_of(ws.d_out, b);
    auto dkb = g.dk.view(r0, 0, b, d);
    auto dvb = g.dv.view(r0, 0, b, d);
    auto s = ws.scores.view(0, 0, b, b);
    const Matrix<T>& mask = masks.for_length(b);

    // dK_intra = [(dO_t V_t^T) . M]^T Q_t
    gemm<T>(Trans::no, Trans::yes, T{1}, dob, vb, T{0}, s);
    apply_mask(s, mask);
    gemm<T>(Trans::yes, Trans::no, T{1}, s, qb, T{0}, dkb);

    // dV_intra = [(Q_t K_t^T) . M]^T dO_t
    gemm<T>(Trans::no, Trans::yes, T{1}, qb, kb, T{0}, s);
    apply_mask(s, mask);
    gemm<T>(Trans::yes, Trans::no, T{1}, s, dob, T{0}, dvb);

    if constexpr (kDecay) {
      // dK_inter = (lambda^b Lambda^-1 V_t) dKV^T, dV_inter = (lambda^b Lambda^-1 K_t) dKV
      const auto tail_factor = [&](std::size_t i) { return pw[b - 1 - i]; };
      scale_rows(ws.v, b, ws.scaled, tail_factor);
      gemm<T>(Trans::no, Trans::yes, T{1}, rows_of(ws.scaled, b), dkv.view(), T{1}, dkb);
      scale_rows(ws.k, b, ws.scaled, tail_factor);
      gemm<T>(Trans::no, Trans::no, T{1}, rows_of(ws.scaled, b), dkv.view(), T{1}, dvb);
      // dKV <- lambda^b dKV + (Lambda Q_t)^T dO_t
      scale_in_place(dkv, static_cast<T>(pw[b]));
      scale_rows(ws.q, b, ws.scaled, [&](std::size_t i) { return pw[i + 1]; });
      gemm<T>(Trans::yes, Trans::no, dkv_sign, rows_of(ws.scaled, b), dob, T{1}, dkv.view());
    } else {
      gemm<T>(Trans::no, Trans::yes, T{1}, vb, dkv.view(), T{1}, dkb);
      gemm<T>(Trans::no, Trans::no, T{1}, kb, dkv.view(), T{1}, dvb);
      gemm<T>(Trans::yes, Trans::no, dkv_sign, qb, dob, T{1}, dkv.view());
    }
  }
  return g;
}

void require_no_decay(const AttentionConfig& cfg, const char* op) {
  if (cfg.lambda != 1.0)
    throw DomainError(std::string(op) + " requires lambda == 1; use the decay variant");
}

}  // namespace

std::size_t AttentionConfig::resolve_block(std::size_t n, std::size_t d) const {
  const std::size_t b = block_size == 0 ? std::min(d, n) : block_size;
  return std::clamp<std::size_t>(b, 1, std::max<std::size_t>(n, 1));
}

template <typename T>
std::size_t lightning_workspace_bytes(std::size_t d, std::size_t block, bool backward) {
  const std::size_t block_rows = (backward ? 6 : 5) * block * d;
  const std::size_t tiles = 3 * block * block;  // scores, full mask, tail mask
  const std::size_t accumulators = 2 * d * d;
  return (block_rows + tiles + accumulators) * sizeof(T);
}

template <typename T>
Matrix<T> lightning_forward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                            const AttentionConfig& cfg) {
  require_no_decay(cfg, "lightning_forward");
  return forward_impl<T, false>(q, k, v, cfg);
}

template <typename T>
GradBundle<T> lightning_backward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                 const Matrix<T>& d_out, const AttentionConfig& cfg) {
  require_no_decay(cfg, "lightning_backward");
  return backward_impl<T, false>(q, k, v, d_out, cfg);
}

template <typename T>
Matrix<T> lightning_forward_decay(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                  const AttentionConfig& cfg) {
  return forward_impl<T, true>(q, k, v, cfg);
}

template <typename T>
GradBundle<T> lightning_backward_decay(const Matrix<T>& q, const Matrix<T>& k,
                                       const Matrix<T>& v, const Matrix<T>& d_out,
                                       const AttentionConfig& cfg) {
  return backward_impl<T, true>(q, k, v, d_out, cfg);
}

ScopedKernelFault::ScopedKernelFault(KernelFault fault) : previous_(current_fault) {
  current_fault = fault;
}

ScopedKernelFault::~ScopedKernelFault() { current_fault = previous_; }

KernelFault active_kernel_fault() { return current_fault; }

#define LIGHTNING_INSTANTIATE(T)                                                          \
  template std::size_t lightning_workspace_bytes<T>(std::size_t, std::size_t, bool);     \
  template Matrix<T> lightning_forward(const Matrix<T>&, const Matrix<T>&,               \
                                       const Matrix<T>&, const AttentionConfig&);        \
  template GradBundle<T> lightning_backward(const Matrix<T>&, const Matrix<T>&,          \
                                            const Matrix<T>&, const Matrix<T>&,          \
                                            const AttentionConfig&);                     \
  template Matrix<T> lightning_forward_decay(const Matrix<T>&, const Matrix<T>&,         \
                                             const Matrix<T>&, const AttentionConfig&);  \
  template GradBundle<T> lightning_backward_decay(const Matrix<T>&, const Matrix<T>&,    \
                                                  const Matrix<T>&, const Matrix<T>&,    \
                                                  const AttentionConfig&);

LIGHTNING_INSTANTIATE(float)
LIGHTNING_INSTANTIATE(double)

#undef LIGHTNING_INSTANTIATE

}  // namespace lightning
