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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lightning/bench.hpp"
#include "lightning/lightning.hpp"
#include "lightning/plot.hpp"
#include "lightning/verify.hpp"

using namespace lightning;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lightning_tests" / name;
  fs::remove_all(dir);
  return dir;
}

BenchConfig small_bench() {
  BenchConfig c;
  c.kernels = {KernelKind::left, KernelKind::right, KernelKind::lightning, KernelKind::lightning_decay};
  c.n = {32, 128};
  c.d = 4;
  c.block = 8;
  c.repeats = 1;
  return c;
}

}  // namespace

TEST_CASE("bench rows cover kernel x n x pass") {
  const auto rows = run_bench(small_bench());
  CHECK(rows.size() == 4 * 2 * 2);
  CHECK(rows[0].kernel == "left");
  CHECK(rows[0].pass == "fwd");
  CHECK(rows[1].pass == "bwd");
  for (const auto& r : rows) {
    CHECK(r.median_ns > 0.0);
    CHECK(r.per_token_ns == doctest::Approx(r.median_ns / static_cast<double>(r.n)));
    CHECK(r.lambda == (r.kernel == "lightning" ? 1.0 : 0.99));
  }
  BenchConfig fwd_only = small_bench();
  fwd_only.backward = false;
  CHECK(run_bench(fwd_only).size() == 4 * 2);
}

TEST_CASE("auxiliary memory: constant for lightning, growing for the left product") {
  BenchConfig c = small_bench();
  c.kernels = {KernelKind::lightning, KernelKind::left};
  c.n = {256, 1024};
  c.d = 8;
  const auto rows = run_bench(c);
  auto aux = [&](const std::string& k, const std::string& pass, std::size_t n) {
    for (const auto& r : rows)
      if (r.kernel == k && r.pass == pass && r.n == n) return r.aux_bytes;
    FAIL("missing row");
    return std::size_t{0};
  };
  CHECK(aux("lightning", "fwd", 256) == aux("lightning", "fwd", 1024));
  CHECK(aux("lightning", "bwd", 256) == aux("lightning", "bwd", 1024));
  CHECK(aux("lightning", "fwd", 1024) <= lightning_workspace_bytes<double>(8, 8, false));
  CHECK(aux("left", "fwd", 1024) > 2 * aux("left", "fwd", 256));
}

TEST_CASE("bench configuration errors") {
  BenchConfig c = small_bench();
  c.precision = Precision::working;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.kernels = {KernelKind::lightning};
  CHECK_NOTHROW(c.validate());
  CHECK(run_bench(c).front().precision == "f32");
  c.n = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_bench();
  c.lambda = 1.5;
  CHECK_THROWS_AS(c.validate(), DomainError);
  CHECK(parse_kernel("lightning-decay") == KernelKind::lightning_decay);
  CHECK_THROWS_AS(parse_kernel("flash"), ConfigError);
}

TEST_CASE("srmsnorm micro-benchmark row") {
  const TimingRecord r = bench_srmsnorm(64, 32, 2, 1);
  CHECK(r.kernel == "srmsnorm");
  CHECK(r.n == 64);
  CHECK(r.median_ns > 0.0);
}

TEST_CASE("bench csv format") {
  std::ostringstream os;
  write_bench_csv(os, run_bench(small_bench()));
  std::istringstream in(os.str());
  const CsvTable t = parse_csv(in);
  CHECK(t.header == kBenchColumns);
  CHECK(t.rows.size() == 16);
  CHECK(t.rows[0][t.column("kernel")] == "left");
}

TEST_CASE("plot writes one svg per metric") {
  const fs::path dir = fresh_dir("plot_ok");
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "bench.csv");
    write_bench_csv(csv, run_bench(small_bench()));
  }
  const auto written = plot_bench_csv(dir / "bench.csv", dir / "svg");
  CHECK(written.size() == 3);
  for (const auto& p : written) {
    REQUIRE(fs::exists(p));
    std::ifstream in(p);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.rfind("<svg", 0) == 0);
    CHECK(text.find("lightning fwd") != std::string::npos);
    CHECK(text.find("</svg>") != std::string::npos);
  }
  // Pure function of the CSV.
  std::ifstream a(written[0]);
  std::string first((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  plot_bench_csv(dir / "bench.csv", dir / "svg2");
  std::ifstream b(dir / "svg2" / written[0].filename());
  std::string second((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(first == second);
}

TEST_CASE("plot errors name the column and write nothing") {
  const fs::path dir = fresh_dir("plot_err");
  fs::create_directories(dir);
  std::ofstream(dir / "missing.csv") << "kernel,pass,n,median_ns,per_token_ns\nleft,fwd,16,1,1\n";
  try {
    plot_bench_csv(dir / "missing.csv", dir / "out1");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("'aux_bytes'") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir / "out1"));

  std::ofstream(dir / "empty.csv").close();
  CHECK_THROWS_AS(plot_bench_csv(dir / "empty.csv", dir / "out2"), InputError);
  CHECK_FALSE(fs::exists(dir / "out2"));

  std::ofstream(dir / "header.csv") << "kernel,pass,n,median_ns,per_token_ns,aux_bytes\n";
  CHECK_THROWS_AS(plot_bench_csv(dir / "header.csv", dir / "out3"), InputError);
  CHECK_FALSE(fs::exists(dir / "out3"));

  std::ofstream(dir / "bad.csv") << "kernel,pass,n,median_ns,per_token_ns,aux_bytes\nleft,fwd,x,1,1,1\n";
  CHECK_THROWS_AS(plot_bench_csv(dir / "bad.csv", dir / "out4"), InputError);
  CHECK_THROWS_AS(plot_bench_csv(dir / "nope.csv", dir / "out5"), InputError);
}

TEST_CASE("verify filters suites") {
  const VerifyReport r = run_verify({"decay"});
  REQUIRE(r.suites.size() == 1);
  CHECK(r.suites[0].name == "decay");
  CHECK(r.passed());
  CHECK_THROWS_AS(run_verify({"nonsense"}), ConfigError);
  CHECK(verify_suite_names().size() == 7);
}

TEST_CASE("injected dKV sign flip is caught and localized") {
  {
    ScopedKernelFault fault(KernelFault::flip_dkv_update_sign);
    const VerifyReport r = run_verify({"backward"});
    CHECK_FALSE(r.passed());
    const CheckResult& c = r.suites[0].checks[0];
    CHECK_FALSE(c.passed);
    CHECK(c.detail.find("n=") != std::string::npos);
    CHECK(c.detail.find("grad=d") != std::string::npos);
    std::ostringstream os;
    print_report(os, r);
    CHECK(os.str().find("FAIL") != std::string::npos);
  }
  CHECK(run_verify({"backward"}).passed());
}
