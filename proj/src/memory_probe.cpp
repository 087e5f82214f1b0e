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

#include "lightning/memory_probe.hpp"

#include <algorithm>

namespace lightning {
namespace {

struct Counters {
  long long live = 0;
  long long peak = 0;
};

thread_local Counters counters;

}  // namespace

namespace detail {

void note_allocation(std::size_t bytes) noexcept {
  counters.live += static_cast<long long>(bytes);
  counters.peak = std::max(counters.peak, counters.live);
}

void note_deallocation(std::size_t bytes) noexcept {
  counters.live -= static_cast<long long>(bytes);
}

}  // namespace detail

MemoryProbe::MemoryProbe() noexcept
    : baseline_(counters.live), saved_peak_(counters.peak) {
  counters.peak = counters.live;
}

MemoryProbe::~MemoryProbe() { counters.peak = std::max(saved_peak_, counters.peak); }

std::size_t MemoryProbe::peak_bytes() const noexcept {
  return static_cast<std::size_t>(std::max(0LL, counters.peak - baseline_));
}

std::size_t MemoryProbe::live_bytes() const noexcept {
  return static_cast<std::size_t>(std::max(0LL, counters.live - baseline_));
}

}  // namespace lightning
