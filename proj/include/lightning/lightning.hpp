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

// Tiled causal linear attention.
//
// The sequence is cut into blocks of B rows. Inside a block the masked left
// product [(Q_t K_t^T) . M] V_t is used; contributions of all earlier blocks
// arrive through a d x d accumulator KV (the right product), so each block
// costs O(B^2 d + B d^2) and the whole pass O(n d^2 + n B d).
//
// With decay lambda, row r (1-based) of block t receives the carried state
// scaled by lambda^r, and the state is advanced by
//   KV <- lambda^b KV + (diag(lambda^(b-1), ..., 1) K_t)^T V_t
// for a block of b rows. The backward pass runs the same recurrence forward
// for dQ and a reversed one on dKV for dK and dV.
//
// Blocks are copied into call-local working buffers before any arithmetic;
// these buffers and the accumulators are the only auxiliary allocations and
// their size depends on (B, d) only.

#include <cstddef>

#include "lightning/matrix.hpp"
#include "lightning/reference.hpp"

namespace lightning {

struct AttentionConfig {
  /// Rows per block. 0 selects min(d, n); values above n are clamped to n.
  std::size_t block_size = 0;
  /// Decay rate in (0, 1]. The non-decay entry points require exactly 1.
  double lambda = 1.0;

  std::size_t resolve_block(std::size_t n, std::size_t d) const;
};

/// Forward and backward d x d accumulators carried across blocks.
template <typename T>
struct KvState {
  explicit KvState(std::size_t d) : kv(d, d), dkv(d, d) {}
  Matrix<T> kv;
  Matrix<T> dkv;
};

/// Upper bound on the bytes of call-local buffers one kernel call allocates for
/// head dim d and block size `block`: working blocks, score tile, the full and
/// tail masks, and both accumulators. Independent of n.
template <typename T>
std::size_t lightning_workspace_bytes(std::size_t d, std::size_t block, bool backward);

template <typename T>
Matrix<T> lightning_forward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                            const AttentionConfig& cfg = {});

template <typename T>
GradBundle<T> lightning_backward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                 const Matrix<T>& d_out, const AttentionConfig& cfg = {});

template <typename T>
Matrix<T> lightning_forward_decay(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                  const AttentionConfig& cfg);

template <typename T>
GradBundle<T> lightning_backward_decay(const Matrix<T>& q, const Matrix<T>& k,
                                       const Matrix<T>& v, const Matrix<T>& d_out,
                                       const AttentionConfig& cfg);

/// Deliberate defects for mutation testing of the verification suites.
enum class KernelFault {
  none,
  flip_dkv_update_sign,  // dKV accumulates -(Lambda Q_t)^T dO_t
};

/// Installs a fault on the current thread for the lifetime of the object.
class ScopedKernelFault {
 public:
  explicit ScopedKernelFault(KernelFault fault);
  ~ScopedKernelFault();
  ScopedKernelFault(const ScopedKernelFault&) = delete;
  ScopedKernelFault& operator=(const ScopedKernelFault&) = delete;

 private:
  KernelFault previous_;
};

KernelFault active_kernel_fault();

}  // namespace lightning
