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

#include "lightning/layers.hpp"

#include <cmath>

#include "lightning/lightning.hpp"
#include "lightning/tensor_ops.hpp"

namespace lightning {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// dX += dY W^T and dW += X^T dY for Y = X W.
void linear_backward(const MatrixD& x, const MatrixD& w, const MatrixD& dy, MatrixD& dw,
                     MatrixD& dx) {
  gemm<double>(Trans::yes, Trans::no, 1.0, x.view(), dy.view(), 1.0, dw.view());
  gemm<double>(Trans::no, Trans::yes, 1.0, dy.view(), w.view(), 1.0, dx.view());
}

AttentionConfig head_config(const GlaSetup& setup, std::size_t head) {
  AttentionConfig cfg;
  cfg.block_size = setup.block_size;
  cfg.lambda = setup.schedule->lambda(head + 1, setup.layer);
  return cfg;
}

void check_setup(const GlaSetup& setup) {
  if (setup.schedule == nullptr) throw ConfigError("GLA setup has no decay schedule");
  if (setup.pe == LayerPe::lrpe_d && setup.lrpe == nullptr)
    throw ConfigError("GLA setup requests LRPE-d but has no angles");
}

}  // namespace

const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::srms: return "srmsnorm";
    case NormKind::rms: return "rmsnorm";
    case NormKind::layer: return "layernorm";
  }
  return "?";
}

const char* to_string(GlaActivation a) {
  switch (a) {
    case GlaActivation::swish: return "swish";
    case GlaActivation::one_plus_elu: return "1+elu";
    case GlaActivation::none: return "none";
  }
  return "?";
}

const char* to_string(GluActivation a) {
  return a == GluActivation::swish ? "swish" : "none";
}

NormKind parse_norm_kind(const std::string& name) {
  for (auto k : {NormKind::srms, NormKind::rms, NormKind::layer})
    if (name == to_string(k)) return k;
  throw ConfigError("unknown norm '" + name + "' (srmsnorm, rmsnorm, layernorm)");
}

GlaActivation parse_gla_activation(const std::string& name) {
  for (auto a : {GlaActivation::swish, GlaActivation::one_plus_elu, GlaActivation::none})
    if (name == to_string(a)) return a;
  throw ConfigError("unknown GLA activation '" + name + "' (swish, 1+elu, none)");
}

GluActivation parse_glu_activation(const std::string& name) {
  for (auto a : {GluActivation::none, GluActivation::swish})
    if (name == to_string(a)) return a;
  throw ConfigError("unknown GLU activation '" + name + "' (none, swish)");
}

std::vector<double> srmsnorm(std::span<const double> x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  const double scale = std::sqrt(static_cast<double>(x.size())) / std::max(std::sqrt(sq), kSrmsEpsilon);
  std::vector<double> y(x.begin(), x.end());
  for (double& v : y) v *= scale;
  return y;
}

double swish(double x) { return x * sigmoid(x); }

double swish_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

NormParams make_norm_params(NormKind kind, std::size_t dim) {
  NormParams p;
  if (kind != NormKind::srms) p.gain = MatrixD(1, dim, 1.0);
  if (kind == NormKind::layer) p.bias = MatrixD(1, dim, 0.0);
  return p;
}

MatrixD norm_forward(NormKind kind, const NormParams& params, const MatrixD& x,
                     NormCache* cache) {
  const std::size_t n = x.rows(), d = x.cols();
  const double root_d = std::sqrt(static_cast<double>(d));
  MatrixD xhat(n, d);
  std::vector<double> inv(n);
  std::vector<bool> guarded(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    if (kind == NormKind::layer) {
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(d);
      double var = 0.0;
      for (double v : row) var += (v - mean) * (v - mean);
      var /= static_cast<double>(d);
      inv[r] = 1.0 / std::sqrt(var + kLayerNormEpsilon);
      for (std::size_t c = 0; c < d; ++c) xhat(r, c) = (row[c] - mean) * inv[r];
    } else {
      double sq = 0.0;
      for (double v : row) sq += v * v;
      const double norm = std::sqrt(sq);
      guarded[r] = norm < kSrmsEpsilon;
      inv[r] = root_d / std::max(norm, kSrmsEpsilon);
      for (std::size_t c = 0; c < d; ++c) xhat(r, c) = row[c] * inv[r];
    }
  }
  MatrixD y = xhat;
  if (kind != NormKind::srms) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        y(r, c) *= params.gain(0, c);
        if (kind == NormKind::layer) y(r, c) += params.bias(0, c);
      }
  }
  if (cache != nullptr) *cache = NormCache{std::move(xhat), std::move(inv), std::move(guarded)};
  return y;
}

MatrixD norm_backward(NormKind kind, const NormParams& params, const NormCache& cache,
                      const MatrixD& dy, NormParams* grads) {
  const std::size_t n = dy.rows(), d = dy.cols();
  MatrixD dxhat = dy;
  if (kind != NormKind::srms) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        if (grads != nullptr) {
          grads->gain(0, c) += dy(r, c) * cache.normalized(r, c);
          if (kind == NormKind::layer) grads->bias(0, c) += dy(r, c);
        }
        dxhat(r, c) *= params.gain(0, c);
      }
  }
  MatrixD dx(n, d);
  const double dd = static_cast<double>(d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto g = dxhat.row(r);
    const auto xh = cache.normalized.row(r);
    double dot = 0.0, sum = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dot += g[c] * xh[c];
      sum += g[c];
    }
    for (std::size_t c = 0; c < d; ++c) {
      if (kind == NormKind::layer) {
        dx(r, c) = cache.inv[r] * (g[c] - sum / dd - xh[c] * dot / dd);
      } else if (cache.guarded[r]) {
        dx(r, c) = cache.inv[r] * g[c];
      } else {
        // x-hat = x sqrt(d)/|x|, so |x-hat|^2 = d.
        dx(r, c) = cache.inv[r] * (g[c] - xh[c] * dot / dd);
      }
    }
  }
  return dx;
}

MatrixD activate(GlaActivation a, const MatrixD& x) {
  MatrixD y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    switch (a) {
      case GlaActivation::swish: y.data()[i] = swish(v); break;
      case GlaActivation::one_plus_elu: y.data()[i] = v > 0.0 ? 1.0 + v : std::exp(v); break;
      case GlaActivation::none: y.data()[i] = v; break;
    }
  }
  return y;
}

MatrixD activate_backward(GlaActivation a, const MatrixD& x, const MatrixD& dy) {
  MatrixD dx(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    double g = 1.0;
    if (a == GlaActivation::swish) g = swish_grad(v);
    if (a == GlaActivation::one_plus_elu) g = v > 0.0 ? 1.0 : std::exp(v);
    dx.data()[i] = dy.data()[i] * g;
  }
  return dx;
}

MatrixD multi_head_attention(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                             std::size_t first_head, std::size_t head_dim,
                             const GlaSetup& setup) {
  check_setup(setup);
  if (head_dim == 0 || q.cols() % head_dim != 0)
    throw ShapeError("multi_head_attention: width is not a multiple of the head dim");
  const std::size_t local_heads = q.cols() / head_dim;
  MatrixD out(q.rows(), q.cols());
  for (std::size_t h = 0; h < local_heads; ++h) {
    MatrixD qh = slice_cols(q, h * head_dim, head_dim);
    MatrixD kh = slice_cols(k, h * head_dim, head_dim);
    if (setup.pe == LayerPe::lrpe_d) {
      qh = apply_lrpe(qh, *setup.lrpe);
      kh = apply_lrpe(kh, *setup.lrpe);
    }
    const MatrixD vh = slice_cols(v, h * head_dim, head_dim);
    set_cols(out, h * head_dim,
             lightning_forward_decay(qh, kh, vh, head_config(setup, first_head + h)));
  }
  return out;
}

MatrixD gla_forward(const MatrixD& x, const GlaWeights& w, const GlaSetup& setup,
                    GlaCache* cache) {
  check_setup(setup);
  const std::size_t width = w.wq.cols();
  if (x.cols() != w.wq.rows() || setup.heads == 0 || width % setup.heads != 0)
    throw ShapeError("gla_forward: input " + shape_string(x) + " does not fit weights " +
                     shape_string(w.wq) + " with " + std::to_string(setup.heads) + " heads");
  const std::size_t head_dim = width / setup.heads;

  GlaCache local;
  GlaCache& c = cache != nullptr ? *cache : local;
  c.x = x;
  c.pre_q = matmul(x, w.wq);
  c.pre_k = matmul(x, w.wk);
  c.q = activate(setup.activation, c.pre_q);
  c.k = activate(setup.activation, c.pre_k);
  c.v = matmul(x, w.wv);
  c.u = setup.gate ? matmul(x, w.wu) : MatrixD();

  c.q_rot.clear();
  c.k_rot.clear();
  c.attention = MatrixD(x.rows(), width);
  for (std::size_t h = 0; h < setup.heads; ++h) {
    MatrixD qh = slice_cols(c.q, h * head_dim, head_dim);
    MatrixD kh = slice_cols(c.k, h * head_dim, head_dim);
    if (setup.pe == LayerPe::lrpe_d) {
      qh = apply_lrpe(qh, *setup.lrpe);
      kh = apply_lrpe(kh, *setup.lrpe);
    }
    const MatrixD vh = slice_cols(c.v, h * head_dim, head_dim);
    set_cols(c.attention, h * head_dim,
             lightning_forward_decay(qh, kh, vh, head_config(setup, h)));
    c.q_rot.push_back(std::move(qh));
    c.k_rot.push_back(std::move(kh));
  }

  static const NormParams kNoParams;
  c.normed = norm_forward(setup.norm, setup.norm_params ? *setup.norm_params : kNoParams,
                          c.attention, &c.norm);
  c.gated = setup.gate ? hadamard(c.normed, c.u) : c.normed;
  return matmul(c.gated, w.wo);
}

MatrixD gla_backward(const GlaWeights& w, const GlaSetup& setup, const GlaCache& c,
                     const MatrixD& d_out, const GlaGrads& grads) {
  const std::size_t n = d_out.rows();
  const std::size_t width = w.wq.cols();
  const std::size_t head_dim = width / setup.heads;
  GlaWeights& gw = *grads.weights;

  gemm<double>(Trans::yes, Trans::no, 1.0, c.gated.view(), d_out.view(), 1.0, gw.wo.view());
  const MatrixD d_gated = matmul_nt(d_out, w.wo);

  MatrixD d_normed = d_gated;
  MatrixD du;
  if (setup.gate) {
    d_normed = hadamard(d_gated, c.u);
    du = hadamard(d_gated, c.normed);
  }
  static const NormParams kNoParams;
  const MatrixD d_attention =
      norm_backward(setup.norm, setup.norm_params ? *setup.norm_params : kNoParams, c.norm,
                    d_normed, grads.norm);

  MatrixD dq(n, width), dk(n, width), dv(n, width);
  for (std::size_t h = 0; h < setup.heads; ++h) {
    const MatrixD vh = slice_cols(c.v, h * head_dim, head_dim);
    const MatrixD doh = slice_cols(d_attention, h * head_dim, head_dim);
    auto g = lightning_backward_decay(c.q_rot[h], c.k_rot[h], vh, doh, head_config(setup, h));
    if (setup.pe == LayerPe::lrpe_d) {
      g.dq = apply_lrpe_backward(c.q_rot[h], g.dq, *setup.lrpe, 0, *grads.theta);
      g.dk = apply_lrpe_backward(c.k_rot[h], g.dk, *setup.lrpe, 0, *grads.theta);
    }
    set_cols(dq, h * head_dim, g.dq);
    set_cols(dk, h * head_dim, g.dk);
    set_cols(dv, h * head_dim, g.dv);
  }

  const MatrixD d_pre_q = activate_backward(setup.activation, c.pre_q, dq);
  const MatrixD d_pre_k = activate_backward(setup.activation, c.pre_k, dk);
  MatrixD dx(n, c.x.cols());
  linear_backward(c.x, w.wq, d_pre_q, gw.wq, dx);
  linear_backward(c.x, w.wk, d_pre_k, gw.wk, dx);
  linear_backward(c.x, w.wv, dv, gw.wv, dx);
  if (setup.gate) linear_backward(c.x, w.wu, du, gw.wu, dx);
  return dx;
}

MatrixD sglu_forward(const MatrixD& x, const SgluWeights& w, GluActivation act,
                     SgluCache* cache) {
  if (x.cols() != w.wv.rows() || w.wv.rows() != w.wu.rows() || w.wv.cols() != w.wu.cols() ||
      w.wo.rows() != w.wv.cols())
    throw ShapeError("sglu_forward: input " + shape_string(x) + " does not fit weights");
  SgluCache local;
  SgluCache& c = cache != nullptr ? *cache : local;
  c.x = x;
  c.pre_v = matmul(x, w.wv);
  c.pre_u = matmul(x, w.wu);
  c.act_u = act == GluActivation::swish ? activate(GlaActivation::swish, c.pre_u) : c.pre_u;
  c.mixed = hadamard(c.pre_v, c.act_u);
  return matmul(c.mixed, w.wo);
}

MatrixD sglu_backward(const SgluWeights& w, GluActivation act, const SgluCache& c,
                      const MatrixD& d_out, SgluWeights& grads) {
  gemm<double>(Trans::yes, Trans::no, 1.0, c.mixed.view(), d_out.view(), 1.0, grads.wo.view());
  const MatrixD d_mixed = matmul_nt(d_out, w.wo);
  const MatrixD d_pre_v = hadamard(d_mixed, c.act_u);
  MatrixD d_pre_u = hadamard(d_mixed, c.pre_v);
  if (act == GluActivation::swish) d_pre_u = activate_backward(GlaActivation::swish, c.pre_u, d_pre_u);
  MatrixD dx(c.x.rows(), c.x.cols());
  linear_backward(c.x, w.wv, d_pre_v, grads.wv, dx);
  linear_backward(c.x, w.wu, d_pre_u, grads.wu, dx);
  return dx;
}

}  // namespace lightning
