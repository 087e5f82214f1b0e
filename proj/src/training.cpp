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

#include "lightning/training.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "lightning/tensor_ops.hpp"

namespace lightning {
namespace {

using json = nlohmann::json;

constexpr const char* kLexicon[] = {
    "the", "of", "and", "to", "a", "in", "is", "it", "that", "was", "for", "on", "are", "as",
    "with", "his", "they", "at", "be", "this", "from", "have", "or", "by", "one", "had", "not",
    "but", "what", "all", "were", "when", "we", "there", "can", "an", "your", "which", "their",
    "said", "if", "do", "will", "each", "about", "how", "up", "out", "them", "then", "she",
    "many", "some", "so", "these", "would", "other", "into", "has", "more", "her", "two", "like",
    "him", "see", "time", "could", "no", "make", "than", "first", "been", "its", "who", "now",
    "people", "my", "made", "over", "did", "down", "only", "way", "find", "use", "may", "water",
    "long", "little", "very", "after", "words", "called", "just", "where", "most", "know",
    "get", "through", "back", "much", "before", "go", "good", "new", "write", "our", "used",
    "me", "man", "too", "any", "day", "same", "right", "look", "think", "also", "around",
    "another", "came", "come", "work", "three", "word", "must", "because", "does", "part",
    "even", "place", "well", "such", "here", "take", "why", "things", "help", "put", "years",
    "different", "away", "again", "off", "went", "old", "number", "great", "tell", "men", "say",
    "small", "every", "found", "still", "between", "name", "should", "home", "big", "give",
    "air", "line", "set", "own", "under", "read", "last", "never", "us", "left", "end", "along",
    "while", "might", "next", "sound", "below", "saw", "something", "thought", "both", "few",
    "those", "always", "looked", "show", "large", "often", "together", "asked", "house",
    "world", "going", "want", "school", "important", "until", "form", "food", "keep",
    "children", "feet", "land", "side", "without", "boy", "once", "animals", "life", "enough",
    "took", "sometimes", "four", "head", "above", "kind", "began", "almost", "live", "page",
    "got", "earth", "need", "far", "hand", "high", "year", "mother", "light", "parts",
    "country", "father", "let", "night", "following", "picture", "being", "study", "second",
    "eyes", "soon", "times", "story", "boys", "since", "white", "days", "ever", "paper", "hard",
    "near", "sentence", "better", "best", "across", "during", "today", "others", "however",
    "sure", "means", "knew", "try", "told", "young", "miles", "sun", "ways", "thing", "whole",
    "hear", "example", "heard", "several", "change", "answer", "room", "sea", "against", "top",
    "turned", "learn", "point", "city", "play", "toward", "five", "using", "himself", "usually",
    "river", "morning", "garden", "quiet", "window", "letter", "forest", "winter", "summer",
};

void check_finite(const TnlModel& model) {
  for (const auto& p : parameters(model))
    if (!all_finite(*p.tensor)) throw DomainError("non-finite weights in " + p.name);
}

json config_to_json(const ModelConfig& c) {
  return {{"vocab", c.vocab},
          {"d_model", c.d_model},
          {"heads", c.heads},
          {"layers", c.layers},
          {"d_ff", c.d_ff},
          {"block_size", c.block_size},
          {"pe", to_string(c.pe)},
          {"decay_temperature", c.decay_temperature},
          {"gate", c.gate},
          {"gla_activation", to_string(c.gla_activation)},
          {"glu_activation", to_string(c.glu_activation)},
          {"norm", to_string(c.norm)},
          {"init_scale", c.init_scale}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab = j.at("vocab").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.block_size = j.at("block_size").get<std::size_t>();
  c.pe = parse_pe_mode(j.at("pe").get<std::string>());
  c.decay_temperature = j.at("decay_temperature").get<bool>();
  c.gate = j.at("gate").get<bool>();
  c.gla_activation = parse_gla_activation(j.at("gla_activation").get<std::string>());
  c.glu_activation = parse_glu_activation(j.at("glu_activation").get<std::string>());
  c.norm = parse_norm_kind(j.at("norm").get<std::string>());
  c.init_scale = j.at("init_scale").get<double>();
  return c;
}

std::filesystem::path with_suffix(std::filesystem::path stem, const char* suffix) {
  stem += suffix;
  return stem;
}

}  // namespace

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

Optimizer::Optimizer(const TnlModel& model, OptimizerConfig config)
    : config_(config), m_(zeros_like(model)), v_(zeros_like(model)) {
  if (!(config.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0)
    throw ConfigError("Adam betas must lie in [0, 1)");
}

void Optimizer::step(TnlModel& model, TnlModel& grads) {
  ++steps_;
  auto params = parameters(model);
  auto g = parameters(grads);

  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : g)
      for (double x : p.tensor->values()) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }

  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params[i].tensor->values();
      const auto d = g[i].tensor->values();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= config_.lr * scale * d[j];
    }
  } else {
    auto m = parameters(m_);
    auto v = parameters(v_);
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params[i].tensor->values();
      const auto d = g[i].tensor->values();
      auto mi = m[i].tensor->values();
      auto vi = v[i].tensor->values();
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double gj = d[j] * scale;
        mi[j] = config_.beta1 * mi[j] + (1.0 - config_.beta1) * gj;
        vi[j] = config_.beta2 * vi[j] + (1.0 - config_.beta2) * gj * gj;
        w[j] -= config_.lr * (mi[j] / c1) / (std::sqrt(vi[j] / c2) + config_.epsilon);
      }
    }
  }
  check_finite(model);
}

double train_step(TnlModel& model, Optimizer& opt, std::span<const Sequence> batch) {
  TnlModel grads = zeros_like(model);
  const double loss = model_loss_and_grads(model, batch, grads);
  if (!std::isfinite(loss)) throw DomainError("non-finite loss");
  opt.step(model, grads);
  return loss;
}

std::vector<int> byte_tokens(std::string_view text) {
  std::vector<int> out(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) out[i] = static_cast<unsigned char>(text[i]);
  return out;
}

std::string read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty()) throw InputError("corpus '" + path.string() + "' is empty");
  return text;
}

std::string synthetic_corpus(std::size_t bytes, std::uint64_t seed) {
  constexpr std::size_t kWords = std::size(kLexicon);
  std::vector<double> weights(kWords);
  for (std::size_t i = 0; i < kWords; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  std::uniform_int_distribution<int> sentence_len(4, 14);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::string text;
  text.reserve(bytes + 128);
  while (text.size() < bytes) {
    const int len = sentence_len(rng);
    for (int w = 0; w < len; ++w) {
      std::string token = kLexicon[word(rng)];
      if (w == 0) token[0] = static_cast<char>(token[0] - 'a' + 'A');
      text += token;
      if (w + 1 < len) text += coin(rng) < 0.08 ? ", " : " ";
    }
    text += coin(rng) < 0.1 ? "?" : ".";
    text += coin(rng) < 0.15 ? "\n" : " ";
  }
  text.resize(bytes);
  return text;
}

BatchSampler::BatchSampler(std::vector<int> tokens, std::size_t seq_len, std::size_t batch,
                           std::uint64_t seed)
    : tokens_(std::move(tokens)), seq_len_(seq_len), batch_(batch), rng_(seed) {
  if (seq_len == 0 || batch == 0) throw ConfigError("sequence length and batch must be positive");
  if (tokens_.size() < seq_len + 1)
    throw InputError("corpus of " + std::to_string(tokens_.size()) +
                     " tokens is shorter than one training window");
}

std::vector<Sequence> BatchSampler::next() {
  std::uniform_int_distribution<std::size_t> start(0, tokens_.size() - seq_len_ - 1);
  std::vector<Sequence> out(batch_);
  for (auto& s : out) {
    const std::size_t b = start(rng_);
    s.assign(tokens_.begin() + static_cast<std::ptrdiff_t>(b),
             tokens_.begin() + static_cast<std::ptrdiff_t>(b + seq_len_ + 1));
  }
  return out;
}

TrainConfig toy_train_config() {
  TrainConfig c;
  c.model.vocab = 256;
  c.model.d_model = 64;
  c.model.heads = 4;
  c.model.layers = 2;
  c.model.d_ff = 128;
  c.steps = 2000;
  c.seq_len = 64;
  c.batch = 4;
  return c;
}

TrainResult train_toy(std::string_view corpus, const TrainConfig& config,
                      const StepCallback& on_step) {
  if (config.model.vocab != 256) throw ConfigError("byte-level training needs vocab 256");
  TrainResult result{init_model(config.model, config.seed), {}};
  Optimizer opt(result.model, config.optimizer);
  BatchSampler sampler(byte_tokens(corpus), config.seq_len, config.batch, config.seed + 1);
  result.losses.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const auto batch = sampler.next();
    const double loss = train_step(result.model, opt, batch);
    result.losses.push_back(loss);
    if (on_step) on_step(step, loss);
  }
  return result;
}

void save_checkpoint(const TnlModel& model, const std::filesystem::path& stem) {
  static_assert(std::endian::native == std::endian::little, "checkpoints are little-endian");
  json manifest;
  manifest["format"] = "lightning-tnl";
  manifest["version"] = 1;
  manifest["config"] = config_to_json(model.config);
  manifest["tensors"] = json::array();

  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw InputError("cannot write checkpoint '" + stem.string() + ".bin'");
  std::size_t offset = 0;
  for (const auto& p : parameters(model)) {
    const std::size_t bytes = p.tensor->size() * sizeof(double);
    bin.write(reinterpret_cast<const char*>(p.tensor->data()), static_cast<std::streamsize>(bytes));
    manifest["tensors"].push_back({{"name", p.name},
                                   {"shape", {p.tensor->rows(), p.tensor->cols()}},
                                   {"precision", to_string(Precision::reference)},
                                   {"offset", offset}});
    offset += bytes;
  }
  if (!bin) throw InputError("failed writing checkpoint '" + stem.string() + ".bin'");
  std::ofstream(with_suffix(stem, ".json")) << manifest.dump(2) << '\n';
}

TnlModel load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream meta(with_suffix(stem, ".json"));
  if (!meta) throw InputError("cannot open checkpoint manifest '" + stem.string() + ".json'");
  json manifest;
  try {
    manifest = json::parse(meta);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "lightning-tnl")
    throw InputError("not a lightning-tnl checkpoint");

  TnlModel model;
  try {
    model = init_model(config_from_json(manifest.at("config")), 0);
  } catch (const json::exception& e) {
    throw InputError(std::string("bad checkpoint config: ") + e.what());
  }
  std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw InputError("cannot open checkpoint data '" + stem.string() + ".bin'");

  auto params = parameters(model);
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != params.size())
    throw InputError("checkpoint holds " + std::to_string(tensors.size()) +
                     " tensors, model expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    MatrixD& dst = *params[i].tensor;
    const auto shape = t.at("shape").get<std::vector<std::size_t>>();
    if (t.at("name").get<std::string>() != params[i].name || shape.size() != 2 ||
        shape[0] != dst.rows() || shape[1] != dst.cols() ||
        t.at("precision").get<std::string>() != to_string(Precision::reference))
      throw InputError("checkpoint tensor " + std::to_string(i) + " does not match '" +
                       params[i].name + "' " + shape_string(dst));
    bin.seekg(static_cast<std::streamoff>(t.at("offset").get<std::size_t>()));
    bin.read(reinterpret_cast<char*>(dst.data()),
             static_cast<std::streamsize>(dst.size() * sizeof(double)));
    if (!bin) throw InputError("truncated checkpoint data for '" + params[i].name + "'");
  }
  return model;
}

}  // namespace lightning
