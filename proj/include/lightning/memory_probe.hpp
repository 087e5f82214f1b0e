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

#include <cstddef>
#include <memory>
#include <new>

namespace lightning {

namespace detail {
void note_allocation(std::size_t bytes) noexcept;
void note_deallocation(std::size_t bytes) noexcept;
}  // namespace detail

// Measures the peak number of live Matrix bytes allocated on the current
// thread while the probe is alive. Allocations that predate the probe (inputs)
// are excluded; the caller subtracts whatever it keeps (outputs).
class MemoryProbe {
 public:
  MemoryProbe() noexcept;
  ~MemoryProbe();
  MemoryProbe(const MemoryProbe&) = delete;
  MemoryProbe& operator=(const MemoryProbe&) = delete;

  std::size_t peak_bytes() const noexcept;
  std::size_t live_bytes() const noexcept;

 private:
  long long baseline_;
  long long saved_peak_;
};

// std::allocator that reports to the thread-local probe counters.
template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    detail::note_allocation(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    detail::note_deallocation(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace lightning
