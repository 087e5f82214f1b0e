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

#include "lightning/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "lightning/decode.hpp"
#include "lightning/layers.hpp"
#include "lightning/lightning.hpp"
#include "lightning/model.hpp"
#include "lightning/positional.hpp"
#include "lightning/reference.hpp"
#include "lightning/tensor_ops.hpp"
#include "lightning/tensor_parallel.hpp"

namespace lightning {
namespace {

constexpr std::size_t kGridN[] = {1, 2, 5, 31, 64, 257};
constexpr std::size_t kGridD[] = {1, 4, 16};
constexpr double kGridLambda[] = {1.0, 0.9, 0.5};

// Tracks the worst error of one check and where it happened.
class Tracker {
 public:
  Tracker(std::string name, double tolerance) : name_(std::move(name)), tolerance_(tolerance) {}

  void record(double err, const std::string& where) {
    if (!(err <= worst_)) {  // NaN counts as worst
      worst_ = err;
      where_ = where;
    }
  }

  CheckResult result() const {
    const bool ok = worst_ <= tolerance_;
    return {name_, worst_, tolerance_, ok, where_};
  }

 private:
  std::string name_;
  double tolerance_;
  double worst_ = 0.0;
  std::string where_;
};

struct Inputs {
  MatrixD q, k, v, d_out;
};

Inputs make_inputs(std::size_t n, std::size_t d, std::uint64_t seed, bool nonnegative = false) {
  std::mt19937_64 rng(seed);
  if (nonnegative) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto m = [&] {
      MatrixD x(n, d);
      for (auto& e : x.values()) e = u(rng);
      return x;
    };
    return {m(), m(), m(), m()};
  }
  return {random_normal<double>(n, d, rng), random_normal<double>(n, d, rng),
          random_normal<double>(n, d, rng), random_normal<double>(n, d, rng)};
}

std::string where(std::size_t n, std::size_t d, std::size_t b, double lambda) {
  std::ostringstream os;
  os << "n=" << n << " d=" << d << " B=" << b << " lambda=" << lambda;
  return os.str();
}

std::vector<std::size_t> grid_blocks(std::size_t n, std::size_t d) {
  std::vector<std::size_t> b{1, 3, d, n};
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

template <typename F>
void for_grid(F&& f) {
  std::uint64_t seed = 1000;
  for (std::size_t n : kGridN)
    for (std::size_t d : kGridD)
      for (double lambda : kGridLambda) {
        ++seed;
        for (std::size_t b : grid_blocks(n, d)) f(n, d, b, lambda, seed);
      }
}

AttentionConfig attention(std::size_t b, double lambda) {
  AttentionConfig c;
  c.block_size = b;
  c.lambda = lambda;
  return c;
}

SuiteResult suite_kernels() {
  Tracker f64("lightning forward vs left product (f64)", 1e-10);
  Tracker f32("lightning forward vs left product (f32, nonnegative inputs)", 1e-4);
  for_grid([&](std::size_t n, std::size_t d, std::size_t b, double lambda, std::uint64_t seed) {
    const std::string at = where(n, d, b, lambda);
    const Inputs in = make_inputs(n, d, seed);
    const MatrixD ref = left_product_forward(in.q, in.k, in.v, lambda);
    const AttentionConfig cfg = attention(b, lambda);
    f64.record(max_relative_error(lightning_forward_decay(in.q, in.k, in.v, cfg), ref), at);
    if (lambda == 1.0)
      f64.record(max_relative_error(lightning_forward(in.q, in.k, in.v, cfg), ref), at);

    const Inputs pos = make_inputs(n, d, seed, true);
    const MatrixF out = lightning_forward_decay(cast<float>(pos.q), cast<float>(pos.k),
                                                cast<float>(pos.v), cfg);
    f32.record(max_relative_error(out, left_product_forward(pos.q, pos.k, pos.v, lambda)), at);
  });
  return {"kernels", {f64.result(), f32.result()}};
}

// sum(O . W) for the causal decayed product, accumulated in long double so
// that finite differences are not limited by double rounding of the loss.
long double extended_weighted_output(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                                const MatrixD& w, double lambda) {
  long double total = 0.0L;
  for (std::size_t t = 0; t < q.rows(); ++t)
    for (std::size_t s = 0; s <= t; ++s) {
      long double score = 0.0L;
      for (std::size_t i = 0; i < q.cols(); ++i)
        score += static_cast<long double>(q(t, i)) * k(s, i);
      score *= std::pow(static_cast<long double>(lambda), static_cast<long double>(t - s));
      long double dot = 0.0L;
      for (std::size_t j = 0; j < v.cols(); ++j) dot += static_cast<long double>(v(s, j)) * w(t, j);
      total += score * dot;
    }
  return total;
}

SuiteResult suite_backward() {
  Tracker grid("lightning backward vs recurrent backward", 1e-10);
  for_grid([&](std::size_t n, std::size_t d, std::size_t b, double lambda, std::uint64_t seed) {
    const Inputs in = make_inputs(n, d, seed);
    const auto ref = reference_backward(in.q, in.k, in.v, in.d_out, lambda);
    const AttentionConfig cfg = attention(b, lambda);
    auto compare = [&](const GradBundle<double>& g) {
      const std::string at = where(n, d, b, lambda);
      grid.record(max_relative_error(g.dq, ref.dq), at + " grad=dQ");
      grid.record(max_relative_error(g.dk, ref.dk), at + " grad=dK");
      grid.record(max_relative_error(g.dv, ref.dv), at + " grad=dV");
    };
    compare(lightning_backward_decay(in.q, in.k, in.v, in.d_out, cfg));
    if (lambda == 1.0) compare(lightning_backward(in.q, in.k, in.v, in.d_out, cfg));
  });

  Tracker fd("recurrent backward vs finite differences (h=1e-5)", 1e-6);
  std::uint64_t seed = 5000;
  for (std::size_t n : {1u, 4u, 9u, 16u})
    for (std::size_t d : {1u, 3u, 8u})
      for (double lambda : kGridLambda) {
        const Inputs in = make_inputs(n, d, ++seed);
        const auto g = reference_backward(in.q, in.k, in.v, in.d_out, lambda);
        // Offsetting by the unperturbed loss keeps the rounding to double
        // relative to the small difference rather than to the loss itself.
        const long double base = extended_weighted_output(in.q, in.k, in.v, in.d_out, lambda);
        auto loss = [&](const MatrixD& q, const MatrixD& k, const MatrixD& v) {
          return static_cast<double>(extended_weighted_output(q, k, v, in.d_out, lambda) - base);
        };
        const std::string at = where(n, d, 0, lambda);
        fd.record(max_relative_error(
                      g.dq, finite_difference_grads(
                                [&](const MatrixD& x) { return loss(x, in.k, in.v); }, in.q, 1e-5)),
                  at + " grad=dQ");
        fd.record(max_relative_error(
                      g.dk, finite_difference_grads(
                                [&](const MatrixD& x) { return loss(in.q, x, in.v); }, in.k, 1e-5)),
                  at + " grad=dK");
        fd.record(max_relative_error(
                      g.dv, finite_difference_grads(
                                [&](const MatrixD& x) { return loss(in.q, in.k, x); }, in.v, 1e-5)),
                  at + " grad=dV");
      }
  return {"backward", {grid.result(), fd.result()}};
}

SuiteResult suite_decay() {
  Tracker identity("right-product recurrence vs left-product sum", 1e-10);
  Tracker tiled("lightning decay forward vs left product", 1e-10);
  for_grid([&](std::size_t n, std::size_t d, std::size_t b, double lambda, std::uint64_t seed) {
    const Inputs in = make_inputs(n, d, seed);
    const MatrixD left = left_product_forward(in.q, in.k, in.v, lambda);
    const std::string at = where(n, d, b, lambda);
    identity.record(max_relative_error(right_product_forward(in.q, in.k, in.v, lambda), left), at);
    tiled.record(max_relative_error(lightning_forward_decay(in.q, in.k, in.v, attention(b, lambda)),
                                    left),
                 at);
  });
  return {"decay", {identity.result(), tiled.result()}};
}

// Scores written directly as sum_j [a.c + b.e] cos(theta_j (t-s)) - [b.c - a.e] sin(...)
// for query pair (a, b) and key pair (c, e), times lambda^(t-s).
MatrixD rotary_score_attention(const MatrixD& q, const MatrixD& k, const MatrixD& v,
                               const MatrixD& theta, double lambda) {
  MatrixD o(q.rows(), v.cols());
  for (std::size_t t = 0; t < q.rows(); ++t)
    for (std::size_t s = 0; s <= t; ++s) {
      const double delta = static_cast<double>(t - s);
      double score = 0.0;
      for (std::size_t j = 0; j < theta.cols(); ++j) {
        const double a = q(t, 2 * j), b = q(t, 2 * j + 1), c = k(s, 2 * j), e = k(s, 2 * j + 1);
        const double angle = theta(0, j) * delta;
        score += (a * c + b * e) * std::cos(angle) - (b * c - a * e) * std::sin(angle);
      }
      score *= std::pow(lambda, delta);
      for (std::size_t col = 0; col < v.cols(); ++col) o(t, col) += score * v(s, col);
    }
  return o;
}

SuiteResult suite_lrpe() {
  Tracker t("lightning decay over LRPE-rotated Q,K vs relative score form", 1e-8);
  std::uint64_t seed = 7000;
  for (std::size_t n : {1u, 7u, 33u, 64u})
    for (std::size_t d : {2u, 8u, 16u})
      for (double lambda : kGridLambda) {
        const Inputs in = make_inputs(n, d, ++seed);
        const LrpeParams p = LrpeParams::geometric(d);
        const MatrixD ref = rotary_score_attention(in.q, in.k, in.v, p.theta, lambda);
        for (std::size_t b : {3u, 16u}) {
          const MatrixD out = lightning_forward_decay(apply_lrpe(in.q, p), apply_lrpe(in.k, p),
                                                      in.v, attention(b, lambda));
          t.record(max_relative_error(out, ref), where(n, d, b, lambda));
        }
      }
  return {"lrpe", {t.result()}};
}

SuiteResult suite_norm() {
  Tracker t("SRMSNorm row norm equals sqrt(d) for ||x|| >= 1e-6", 1e-10);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> exponent(-6.0, 6.0);
  std::normal_distribution<double> normal;
  for (std::size_t d : {1u, 2u, 3u, 16u, 64u, 1000u})
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> x(d);
      for (auto& e : x) e = normal(rng);
      double n = 0.0;
      for (double e : x) n += e * e;
      const double target = std::pow(10.0, exponent(rng));
      for (auto& e : x) e *= target / std::sqrt(n);
      const auto y = srmsnorm(x);
      double ny = 0.0;
      for (double e : y) ny += e * e;
      t.record(std::abs(std::sqrt(ny) - std::sqrt(static_cast<double>(d))),
               "d=" + std::to_string(d) + " |x|=" + std::to_string(target));
    }
  return {"norm", {t.result()}};
}

SuiteResult suite_model() {
  ModelConfig c;
  c.vocab = 11;
  c.d_model = 16;
  c.heads = 2;
  c.layers = 2;
  c.d_ff = 12;
  c.block_size = 3;
  c.init_scale = 0.5;
  TnlModel model = init_model(c, 7);
  const std::vector<Sequence> batch{{1, 4, 2, 9, 0, 3, 3, 7}, {10, 5, 6, 1, 8}};
  TnlModel grads = zeros_like(model);
  model_loss_and_grads(model, batch, grads);

  Tracker g("every model parameter vs five-point finite differences", 1e-4);
  const double h = 1e-4;
  auto params = parameters(model);
  const auto analytic = parameters(grads);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].tensor->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      auto at = [&](double delta) {
        values[i] = saved + delta;
        return model_loss(model, batch);
      };
      const double fd = ((at(-2 * h) - at(2 * h)) + 8 * (at(h) - at(-h))) / (12 * h);
      values[i] = saved;
      g.record(relative_error(analytic[p].tensor->values()[i], fd),
               params[p].name + "[" + std::to_string(i) + "]");
    }
  }

  Tracker decode("stepwise decode vs parallel forward logits (64 tokens)", 1e-6);
  ModelConfig dc = c;
  dc.vocab = 40;
  dc.block_size = 7;
  dc.init_scale = 0.4;
  const TnlModel dm = init_model(dc, 17);
  std::mt19937_64 rng(5);
  std::vector<int> tokens(64);
  for (auto& t : tokens) t = static_cast<int>(rng() % dc.vocab);
  const MatrixD parallel = model_forward(dm, tokens);
  DecodeState state = init_decode_state(dm);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const StepOutput out = generate_step(dm, state, tokens[t]);
    for (std::size_t v = 0; v < dc.vocab; ++v)
      decode.record(relative_error(out.logits[v], parallel(t, v)), "position " + std::to_string(t));
  }
  return {"model", {g.result(), decode.result()}};
}

SuiteResult suite_sharding() {
  std::mt19937_64 rng(31);
  const std::size_t dm = 16, ff = 8, n = 21;
  const MatrixD x = random_normal<double>(n, dm, rng);
  const SgluWeights sw{random_normal<double>(dm, ff, rng), random_normal<double>(dm, ff, rng),
                       random_normal<double>(ff, dm, rng)};
  const GlaWeights gw{random_normal<double>(dm, dm, rng, 0.4), random_normal<double>(dm, dm, rng, 0.4),
                      random_normal<double>(dm, dm, rng, 0.4), random_normal<double>(dm, dm, rng, 0.4),
                      random_normal<double>(dm, dm, rng, 0.4)};
  const DecaySchedule schedule(4, 2);
  const LrpeParams lrpe = LrpeParams::geometric(4);
  GlaSetup setup;
  setup.heads = 4;
  setup.layer = 1;
  setup.schedule = &schedule;
  setup.pe = LayerPe::lrpe_d;
  setup.lrpe = &lrpe;
  setup.block_size = 4;

  Tracker sglu("sharded SGLU vs unsharded", 1e-12);
  Tracker gla("sharded GLA vs unsharded", 1e-10);
  Tracker reduces("output all-reduces per block pass minus one", 0.0);
  const MatrixD sglu_ref = sglu_forward(x, sw);
  const MatrixD gla_ref = gla_forward(x, gw, setup);
  for (std::size_t p : {1u, 2u, 4u}) {
    const std::string at = "P=" + std::to_string(p);
    CollectiveCounters a, b;
    sglu.record(max_relative_error(
                    sglu_parallel_forward(x, shard_weights(sw, p), GluActivation::none, a), sglu_ref),
                at);
    gla.record(max_relative_error(gla_parallel_forward(x, shard_weights(gw, 4, p), setup, b), gla_ref),
               at);
    reduces.record(std::abs(static_cast<double>(a.all_reduce) - 1.0), at + " SGLU");
    reduces.record(std::abs(static_cast<double>(b.all_reduce) - 1.0), at + " GLA");
  }
  return {"sharding", {sglu.result(), gla.result(), reduces.result()}};
}

using SuiteFn = SuiteResult (*)();

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r{
      {"kernels", suite_kernels}, {"backward", suite_backward}, {"decay", suite_decay},
      {"lrpe", suite_lrpe},       {"norm", suite_norm},         {"model", suite_model},
      {"sharding", suite_sharding},
  };
  return r;
}

}  // namespace

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

bool VerifyReport::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const auto& s) { return s.passed(); });
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

VerifyReport run_verify(const std::vector<std::string>& suites) {
  for (const auto& s : suites)
    if (std::find(verify_suite_names().begin(), verify_suite_names().end(), s) ==
        verify_suite_names().end())
      throw ConfigError("unknown suite '" + s + "'");
  VerifyReport report;
  for (const auto& [name, fn] : registry())
    if (suites.empty() || std::find(suites.begin(), suites.end(), name) != suites.end())
      report.suites.push_back(fn());
  return report;
}

void print_report(std::ostream& out, const VerifyReport& report) {
  const auto flags = out.flags();
  for (const auto& suite : report.suites) {
    out << "[" << (suite.passed() ? "PASS" : "FAIL") << "] " << suite.name << '\n';
    for (const auto& c : suite.checks) {
      out << "    " << (c.passed ? "ok  " : "FAIL") << "  " << std::scientific
          << std::setprecision(2) << c.max_error << " <= " << c.tolerance << "  " << c.name;
      if (!c.passed) out << "  (worst at " << c.detail << ")";
      out << '\n';
      out.flags(flags);
    }
  }
  out << (report.passed() ? "verify: all suites passed" : "verify: FAILED") << '\n';
}

}  // namespace lightning
