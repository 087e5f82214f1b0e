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

#include <iosfwd>
#include <string>
#include <vector>

namespace lightning {

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;  // where the worst error occurred
};

struct SuiteResult {
  std::string name;
  std::vector<CheckResult> checks;
  bool passed() const;
};

struct VerifyReport {
  std::vector<SuiteResult> suites;
  bool passed() const;
};

/// kernels, backward, decay, lrpe, norm, model, sharding.
const std::vector<std::string>& verify_suite_names();

/// Runs the named suites (all when empty). Throws ConfigError on unknown names.
VerifyReport run_verify(const std::vector<std::string>& suites = {});

void print_report(std::ostream& out, const VerifyReport& report);

}  // namespace lightning
