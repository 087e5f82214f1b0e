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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lightning {

/// Plain comma-separated table (no quoting). The first line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name`; throws InputError naming the column when absent.
  std::size_t column(const std::string& name) const;
};

/// Throws InputError on an empty input or a row whose width differs from the header.
CsvTable parse_csv(std::istream& in);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Line chart with log-scaled axes as a standalone SVG document.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series);

/// Reads a bench CSV and writes one SVG per metric (median time, per-token
/// time, auxiliary memory) into `out_dir`. Nothing is written if the CSV is
/// empty or malformed. Returns the written paths.
std::vector<std::filesystem::path> plot_bench_csv(const std::filesystem::path& csv,
                                                  const std::filesystem::path& out_dir);

}  // namespace lightning
