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

// Building blocks of the TNL block, each with an explicit backward pass.
//
// Forward functions take an optional cache pointer; when given, it receives
// whatever the matching backward needs. Backward functions return the input
// gradient and accumulate parameter gradients into the supplied tensors.

#include <span>
#include <string>
#include <vector>

#include "lightning/matrix.hpp"
#include "lightning/positional.hpp"

namespace lightning {

enum class NormKind { srms, rms, layer };
enum class GlaActivation { swish, one_plus_elu, none };
enum class GluActivation { none, swish };

const char* to_string(NormKind k);
const char* to_string(GlaActivation a);
const char* to_string(GluActivation a);
NormKind parse_norm_kind(const std::string& name);
GlaActivation parse_gla_activation(const std::string& name);
GluActivation parse_glu_activation(const std::string& name);

/// Guard below which SimpleRMSNorm treats a row as zero.
inline constexpr double kSrmsEpsilon = 1e-8;
inline constexpr double kLayerNormEpsilon = 1e-5;

/// y = x / (max(||x||_2, eps) / sqrt(d)).
std::vector<double> srmsnorm(std::span<const double> x);

/// x * sigmoid(x).
double swish(double x);
double swish_grad(double x);

/// Learnable affine part of a norm. Empty for SimpleRMSNorm; gain for RMSNorm;
/// gain and bias for LayerNorm.
struct NormParams {
  MatrixD gain;  // 1 x d
  MatrixD bias;  // 1 x d
};

NormParams make_norm_params(NormKind kind, std::size_t dim);

struct NormCache {
  MatrixD normalized;        // x-hat before the affine part
  std::vector<double> inv;   // per-row multiplier applied to x (or x - mean)
  std::vector<bool> guarded; // SRMS/RMS rows whose norm fell under the guard
};

/// Row-wise normalization of an n x d matrix.
MatrixD norm_forward(NormKind kind, const NormParams& params, const MatrixD& x,
                     NormCache* cache = nullptr);
MatrixD norm_backward(NormKind kind, const NormParams& params, const NormCache& cache,
                      const MatrixD& dy, NormParams* grads);

MatrixD activate(GlaActivation a, const MatrixD& x);
/// dy * activation'(x) entry-wise.
MatrixD activate_backward(GlaActivation a, const MatrixD& x, const MatrixD& dy);

struct GlaWeights {
  MatrixD wq, wk, wv, wu, wo;  // d_model x d_model
};

struct SgluWeights {
  MatrixD wv, wu;  // d_model x d_ff
  MatrixD wo;      // d_ff x d_model
};

/// Everything about a GLA layer that is not a projection weight.
struct GlaSetup {
  std::size_t heads = 1;
  std::size_t layer = 1;  // 1-based, indexes the decay schedule
  const DecaySchedule* schedule = nullptr;
  LayerPe pe = LayerPe::decay_only;
  const LrpeParams* lrpe = nullptr;  // required when pe == lrpe_d
  std::size_t block_size = 0;        // attention block; 0 = head dim
  GlaActivation activation = GlaActivation::swish;
  bool gate = true;
  NormKind norm = NormKind::srms;
  const NormParams* norm_params = nullptr;
};

/// Per-head causal decayed attention over column slices of Q, K, V. Heads are
/// contiguous column groups of width head_dim starting at global head
/// `first_head` (0-based); each gets lambda from the schedule and, for LRPE
/// layers, rotated queries and keys.
MatrixD multi_head_attention(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                             std::size_t first_head, std::size_t head_dim,
                             const GlaSetup& setup);

struct GlaCache {
  MatrixD x, pre_q, pre_k, q, k, v, u;
  std::vector<MatrixD> q_rot, k_rot;  // per head, as fed to the kernel
  MatrixD attention;
  NormCache norm;
  MatrixD normed, gated;
};

struct GlaGrads {
  GlaWeights* weights = nullptr;
  MatrixD* theta = nullptr;  // 1 x head_dim/2, used for LRPE layers
  NormParams* norm = nullptr;
};

/// O = (Norm(attention(phi(X Wq), phi(X Wk), X Wv)) . X Wu) Wo
MatrixD gla_forward(const MatrixD& x, const GlaWeights& w, const GlaSetup& setup,
                    GlaCache* cache = nullptr);
MatrixD gla_backward(const GlaWeights& w, const GlaSetup& setup, const GlaCache& cache,
                     const MatrixD& d_out, const GlaGrads& grads);

struct SgluCache {
  MatrixD x, pre_v, pre_u, act_u, mixed;
};

/// O = [(X Wv) . act(X Wu)] Wo; act is the identity in the default configuration.
MatrixD sglu_forward(const MatrixD& x, const SgluWeights& w,
                     GluActivation act = GluActivation::none, SgluCache* cache = nullptr);
MatrixD sglu_backward(const SgluWeights& w, GluActivation act, const SgluCache& cache,
                      const MatrixD& d_out, SgluWeights& grads);

}  // namespace lightning
