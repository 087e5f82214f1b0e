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

// Command-line front end: verify, bench, train-toy, plot.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lightning/bench.hpp"
#include "lightning/decode.hpp"
#include "lightning/errors.hpp"
#include "lightning/lightning.hpp"
#include "lightning/plot.hpp"
#include "lightning/training.hpp"
#include "lightning/verify.hpp"

namespace fs = std::filesystem;
using namespace lightning;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

fs::path default_out_dir() {
  const char* env = std::getenv("LIGHTNING_OUT_DIR");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path(".");
}

struct VerifyArgs {
  std::vector<std::string> suites;
  std::string fault = "none";
};

int cmd_verify(const VerifyArgs& args) {
  KernelFault fault = KernelFault::none;
  if (args.fault == "dkv_sign") fault = KernelFault::flip_dkv_update_sign;
  else if (args.fault != "none") throw ConfigError("unknown fault '" + args.fault + "'");
  ScopedKernelFault scoped(fault);
  const VerifyReport report = run_verify(args.suites);
  print_report(std::cout, report);
  return report.passed() ? kExitOk : kExitVerifyFailed;
}

struct BenchArgs {
  std::vector<std::string> kernels{"left", "lightning"};
  std::vector<std::size_t> n{1024, 2048, 4096, 8192, 16384};
  std::size_t d = 64;
  std::size_t block = 64;
  double lambda = 0.99;
  std::string precision = "f64";
  std::size_t repeats = 3;
  std::uint64_t seed = 1;
  bool forward_only = false;
  std::string out;
};

int cmd_bench(const BenchArgs& args) {
  BenchConfig cfg;
  cfg.kernels.clear();
  for (const auto& k : args.kernels) cfg.kernels.push_back(parse_kernel(k));
  cfg.n = args.n;
  cfg.d = args.d;
  cfg.block = args.block;
  cfg.lambda = args.lambda;
  if (args.precision == "f32") cfg.precision = Precision::working;
  else if (args.precision != "f64") throw ConfigError("precision must be f64 or f32");
  cfg.repeats = args.repeats;
  cfg.seed = args.seed;
  cfg.backward = !args.forward_only;
  cfg.validate();

  const fs::path out = args.out.empty() ? default_out_dir() / "bench.csv" : fs::path(args.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const auto records = run_bench(cfg, [](const TimingRecord& r) {
    std::cerr << std::left << std::setw(16) << r.kernel << ' ' << r.pass << "  n=" << std::setw(6)
              << r.n << "  " << std::fixed << std::setprecision(3) << r.median_ns / 1e6
              << " ms  " << std::setprecision(1) << r.per_token_ns << " ns/token  aux "
              << r.aux_bytes << " B\n";
  });
  std::ofstream file(out);
  if (!file) throw InputError("cannot write '" + out.string() + "'");
  write_bench_csv(file, records);
  std::cout << "wrote " << records.size() << " rows to " << out.string() << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string corpus;
  std::size_t steps = 2000;
  std::uint64_t seed = 1;
  double lr = 3e-4;
  std::string optimizer = "adam";
  std::size_t batch = 4;
  std::size_t seq_len = 64;
  std::string out;
  std::size_t log_every = 100;
};

int cmd_train_toy(const TrainArgs& args) {
  std::string corpus_path = args.corpus;
  if (corpus_path.empty())
    if (const char* env = std::getenv("LIGHTNING_CORPUS"); env != nullptr) corpus_path = env;
  const std::string corpus =
      corpus_path.empty() ? synthetic_corpus(1 << 20, args.seed) : read_corpus(corpus_path);
  std::cerr << "corpus: " << (corpus_path.empty() ? "synthetic" : corpus_path) << ", "
            << corpus.size() << " bytes\n";

  TrainConfig cfg = toy_train_config();
  cfg.steps = args.steps;
  cfg.seed = args.seed;
  cfg.optimizer.lr = args.lr;
  cfg.optimizer.kind = parse_optimizer(args.optimizer);
  cfg.batch = args.batch;
  cfg.seq_len = args.seq_len;

  const fs::path dir = args.out.empty() ? default_out_dir() : fs::path(args.out);
  fs::create_directories(dir);
  std::ofstream curve(dir / "loss.csv");
  if (!curve) throw InputError("cannot write '" + (dir / "loss.csv").string() + "'");
  curve << "step,loss\n" << std::setprecision(10);

  const TrainResult result = train_toy(corpus, cfg, [&](std::size_t step, double loss) {
    curve << step << ',' << loss << '\n';
    if (args.log_every != 0 && (step % args.log_every == 0 || step + 1 == args.steps))
      std::cerr << "step " << step << "  loss " << std::fixed << std::setprecision(4) << loss
                << std::defaultfloat << '\n';
  });
  save_checkpoint(result.model, dir / "model");

  const std::string prompt = "The ";
  const auto ids = generate(result.model, byte_tokens(prompt), 120, 0.8, args.seed);
  std::string sample = prompt;
  for (int id : ids) sample += static_cast<char>(id);
  const double first = result.losses.empty() ? NAN : result.losses.front();
  const double last = result.losses.empty() ? NAN : result.losses.back();
  std::cout << "initial loss " << first << ", final loss " << last << " (uniform "
            << std::log(256.0) << ")\n"
            << "wrote " << (dir / "loss.csv").string() << " and " << (dir / "model").string()
            << ".{bin,json}\n"
            << "sample: " << sample << '\n';
  return kExitOk;
}

int cmd_plot(const std::string& csv, const std::string& out) {
  const auto written = plot_bench_csv(csv, out.empty() ? default_out_dir() : fs::path(out));
  for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lightning Attention: tiled causal linear attention, verification and benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lightning 0.1.0");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Run oracle-equivalence and gradient suites");
  v->add_option("--suite", verify.suites, "Suite to run (repeatable); default all")
      ->check(CLI::IsMember(verify_suite_names()));
  v->add_option("--inject-fault", verify.fault)->group("");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time kernels across sequence lengths, write CSV");
  b->add_option("--kernels", bench.kernels,
                "left, right, lightning, lightning-decay, srmsnorm")
      ->delimiter(',');
  b->add_option("--n", bench.n, "Sequence lengths")->delimiter(',');
  b->add_option("--d", bench.d, "Head dimension");
  b->add_option("--B", bench.block, "Block size (0 = head dim)");
  b->add_option("--lambda", bench.lambda, "Decay rate for decayed kernels");
  b->add_option("--precision", bench.precision, "f64 or f32")->check(CLI::IsMember({"f64", "f32"}));
  b->add_option("--repeats", bench.repeats, "Timed calls per point (median reported)");
  b->add_option("--seed", bench.seed, "Input seed");
  b->add_flag("--forward-only", bench.forward_only, "Skip the backward pass");
  b->add_option("--out", bench.out, "CSV path (default $LIGHTNING_OUT_DIR/bench.csv)");

  TrainArgs train;
  auto* t = app.add_subcommand("train-toy", "Train the byte-level model on a text file");
  t->add_option("--corpus", train.corpus,
                "UTF-8 text file (default $LIGHTNING_CORPUS or 1 MiB of synthetic prose)");
  t->add_option("--steps", train.steps, "Optimizer steps");
  t->add_option("--seed", train.seed, "Seed for weights, batches and sampling");
  t->add_option("--lr", train.lr, "Learning rate");
  t->add_option("--optimizer", train.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
  t->add_option("--batch", train.batch, "Sequences per step");
  t->add_option("--seq-len", train.seq_len, "Tokens per sequence");
  t->add_option("--out", train.out, "Output directory (default $LIGHTNING_OUT_DIR or .)");
  t->add_option("--log-every", train.log_every, "Progress interval in steps (0 = quiet)");

  std::string plot_csv, plot_out;
  auto* p = app.add_subcommand("plot", "Render SVG charts from a bench CSV");
  p->add_option("csv", plot_csv, "Bench CSV")->required();
  p->add_option("--out", plot_out, "Output directory (default $LIGHTNING_OUT_DIR or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*v) return cmd_verify(verify);
    if (*b) return cmd_bench(bench);
    if (*t) return cmd_train_toy(train);
    if (*p) return cmd_plot(plot_csv, plot_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitVerifyFailed;
  }
  return kExitUsage;
}
