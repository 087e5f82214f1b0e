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

#include "lightning/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lightning/tensor_ops.hpp"

namespace lightning {
namespace {

struct LayerCache {
  NormCache norm1;
  GlaCache gla;
  NormCache norm2;
  SgluCache sglu;
};

struct SequenceCache {
  std::vector<LayerCache> layers;
  NormCache final_norm;
  MatrixD final_hidden;
};

void check_tokens(const TnlModel& model, std::span<const int> tokens) {
  for (int t : tokens)
    if (t < 0 || static_cast<std::size_t>(t) >= model.config.vocab)
      throw InputError("token id " + std::to_string(t) + " outside vocabulary of " +
                       std::to_string(model.config.vocab));
}

MatrixD embed(const TnlModel& model, std::span<const int> tokens) {
  const std::size_t d = model.config.d_model;
  MatrixD x(tokens.size(), d);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    std::copy_n(model.embedding.row(static_cast<std::size_t>(tokens[i])).data(), d, x.row(i).data());
  return x;
}

MatrixD block_forward(const TnlModel& model, std::size_t l, const MatrixD& x, LayerCache* cache) {
  const TnlLayer& layer = model.layers[l];
  const NormKind kind = model.config.norm;
  const GlaSetup setup = gla_setup(model, l);
  const MatrixD h1 = norm_forward(kind, layer.norm1, x, cache ? &cache->norm1 : nullptr);
  const MatrixD y = add(x, gla_forward(h1, layer.gla, setup, cache ? &cache->gla : nullptr));
  const MatrixD h2 = norm_forward(kind, layer.norm2, y, cache ? &cache->norm2 : nullptr);
  return add(y, sglu_forward(h2, layer.sglu, model.config.glu_activation,
                             cache ? &cache->sglu : nullptr));
}

MatrixD forward_cached(const TnlModel& model, std::span<const int> tokens, SequenceCache* cache) {
  check_tokens(model, tokens);
  if (tokens.empty()) throw InputError("empty token sequence");
  MatrixD x = embed(model, tokens);
  if (cache) cache->layers.resize(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l)
    x = block_forward(model, l, x, cache ? &cache->layers[l] : nullptr);
  MatrixD hf = norm_forward(model.config.norm, model.final_norm, x,
                            cache ? &cache->final_norm : nullptr);
  MatrixD logits = matmul(hf, model.head);
  if (cache) cache->final_hidden = std::move(hf);
  return logits;
}

// Sum over rows of -log softmax(logits)[target]; optionally writes
// d(sum)/d(logits) * weight into `dlogits`.
double cross_entropy(const MatrixD& logits, std::span<const int> targets, double weight,
                     MatrixD* dlogits) {
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    const auto target = static_cast<std::size_t>(targets[r]);
    total += log_z - row[target];
    if (dlogits != nullptr) {
      for (std::size_t c = 0; c < row.size(); ++c)
        (*dlogits)(r, c) = weight * std::exp(row[c] - log_z);
      (*dlogits)(r, target) -= weight;
    }
  }
  return total;
}

std::size_t count_targets(std::span<const Sequence> batch) {
  std::size_t n = 0;
  for (const auto& s : batch) {
    if (s.size() < 2) throw InputError("training sequences need at least two tokens");
    n += s.size() - 1;
  }
  if (n == 0) throw InputError("empty batch");
  return n;
}

void zero(TnlModel& m) {
  for (auto& p : parameters(m)) p.tensor->fill(0.0);
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab == 0 || d_model == 0 || heads == 0 || layers == 0 || d_ff == 0)
    throw ConfigError("model sizes must be positive");
  if (d_model % heads != 0)
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  if (pe != PeMode::decay_only && head_dim() % 2 != 0)
    throw ConfigError("LRPE-d needs an even head dimension");
}

TnlModel init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const double stddev = config.init_scale / std::sqrt(static_cast<double>(config.layers));
  const std::size_t d = config.d_model, f = config.d_ff;
  auto w = [&](std::size_t r, std::size_t c) { return random_normal<double>(r, c, rng, stddev); };

  TnlModel m;
  m.config = config;
  m.schedule = DecaySchedule(config.heads, config.layers, config.decay_temperature);
  m.embedding = w(config.vocab, d);
  for (std::size_t l = 0; l < config.layers; ++l) {
    TnlLayer layer;
    layer.norm1 = make_norm_params(config.norm, d);
    layer.gla = {w(d, d), w(d, d), w(d, d), w(d, d), w(d, d)};
    layer.gla_norm = make_norm_params(config.norm, d);
    if (layer_pe_policy(l + 1, config.layers, config.pe) == LayerPe::lrpe_d)
      layer.lrpe = LrpeParams::geometric(config.head_dim());
    layer.norm2 = make_norm_params(config.norm, d);
    layer.sglu = {w(d, f), w(d, f), w(f, d)};
    m.layers.push_back(std::move(layer));
  }
  m.final_norm = make_norm_params(config.norm, d);
  m.head = w(d, config.vocab);
  return m;
}

TnlModel zeros_like(const TnlModel& model) {
  TnlModel z = model;
  zero(z);
  return z;
}

std::vector<ParamRef> parameters(TnlModel& m) {
  std::vector<ParamRef> out;
  auto put = [&](std::string name, MatrixD& t) {
    if (!t.empty()) out.push_back({std::move(name), &t});
  };
  auto put_norm = [&](const std::string& prefix, NormParams& n) {
    put(prefix + ".gain", n.gain);
    put(prefix + ".bias", n.bias);
  };
  put("embedding", m.embedding);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    TnlLayer& layer = m.layers[l];
    const std::string p = "layers." + std::to_string(l);
    put_norm(p + ".norm1", layer.norm1);
    put(p + ".gla.wq", layer.gla.wq);
    put(p + ".gla.wk", layer.gla.wk);
    put(p + ".gla.wv", layer.gla.wv);
    put(p + ".gla.wu", layer.gla.wu);
    put(p + ".gla.wo", layer.gla.wo);
    put_norm(p + ".gla.norm", layer.gla_norm);
    put(p + ".gla.theta", layer.lrpe.theta);
    put_norm(p + ".norm2", layer.norm2);
    put(p + ".sglu.wv", layer.sglu.wv);
    put(p + ".sglu.wu", layer.sglu.wu);
    put(p + ".sglu.wo", layer.sglu.wo);
  }
  put_norm("final_norm", m.final_norm);
  put("head", m.head);
  return out;
}

std::vector<ConstParamRef> parameters(const TnlModel& m) {
  std::vector<ConstParamRef> out;
  for (auto& p : parameters(const_cast<TnlModel&>(m))) out.push_back({p.name, p.tensor});
  return out;
}

std::size_t parameter_count(const TnlModel& model) {
  std::size_t n = 0;
  for (const auto& p : parameters(model)) n += p.tensor->size();
  return n;
}

GlaSetup gla_setup(const TnlModel& model, std::size_t layer_index) {
  const ModelConfig& c = model.config;
  const TnlLayer& layer = model.layers.at(layer_index);
  GlaSetup s;
  s.heads = c.heads;
  s.layer = layer_index + 1;
  s.schedule = &model.schedule;
  s.pe = layer_pe_policy(layer_index + 1, c.layers, c.pe);
  s.lrpe = s.pe == LayerPe::lrpe_d ? &layer.lrpe : nullptr;
  s.block_size = c.block_size;
  s.activation = c.gla_activation;
  s.gate = c.gate;
  s.norm = c.norm;
  s.norm_params = &layer.gla_norm;
  return s;
}

MatrixD tnl_block_forward(const TnlModel& model, std::size_t layer_index, const MatrixD& x) {
  return block_forward(model, layer_index, x, nullptr);
}

MatrixD model_forward(const TnlModel& model, std::span<const int> tokens) {
  return forward_cached(model, tokens, nullptr);
}

double model_loss(const TnlModel& model, std::span<const Sequence> batch) {
  const std::size_t count = count_targets(batch);
  double total = 0.0;
  for (const auto& seq : batch) {
    const std::span<const int> all(seq);
    const MatrixD logits = model_forward(model, all.first(seq.size() - 1));
    total += cross_entropy(logits, all.subspan(1), 0.0, nullptr);
  }
  return total / static_cast<double>(count);
}

double model_loss_and_grads(const TnlModel& model, std::span<const Sequence> batch,
                            TnlModel& grads) {
  const std::size_t count = count_targets(batch);
  const double weight = 1.0 / static_cast<double>(count);
  const ModelConfig& cfg = model.config;
  zero(grads);

  double total = 0.0;
  for (const auto& seq : batch) {
    const std::span<const int> all(seq);
    const auto inputs = all.first(seq.size() - 1);
    SequenceCache cache;
    const MatrixD logits = forward_cached(model, inputs, &cache);
    MatrixD dlogits(logits.rows(), logits.cols());
    total += cross_entropy(logits, all.subspan(1), weight, &dlogits);

    gemm<double>(Trans::yes, Trans::no, 1.0, cache.final_hidden.view(), dlogits.view(), 1.0,
                 grads.head.view());
    MatrixD dx = norm_backward(cfg.norm, model.final_norm, cache.final_norm,
                               matmul_nt(dlogits, model.head), &grads.final_norm);

    for (std::size_t l = model.layers.size(); l-- > 0;) {
      const TnlLayer& layer = model.layers[l];
      TnlLayer& g = grads.layers[l];
      const LayerCache& c = cache.layers[l];

      const MatrixD d_h2 = sglu_backward(layer.sglu, cfg.glu_activation, c.sglu, dx, g.sglu);
      MatrixD dy = add(dx, norm_backward(cfg.norm, layer.norm2, c.norm2, d_h2, &g.norm2));

      const GlaGrads gla_grads{&g.gla, &g.lrpe.theta, &g.gla_norm};
      const MatrixD d_h1 = gla_backward(layer.gla, gla_setup(model, l), c.gla, dy, gla_grads);
      dx = add(dy, norm_backward(cfg.norm, layer.norm1, c.norm1, d_h1, &g.norm1));
    }

    for (std::size_t i = 0; i < inputs.size(); ++i) {
      auto dst = grads.embedding.row(static_cast<std::size_t>(inputs[i]));
      const auto src = dx.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  }
  return total * weight;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(logits[i] - mx);
  for (double& v : p) v /= z;
  return p;
}

}  // namespace lightning
