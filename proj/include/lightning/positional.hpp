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
#include <ostream>
#include <string>
#include <vector>

#include "lightning/matrix.hpp"

namespace lightning {

/// Decay rate for head h of H in layer l of L (both 1-based):
///   exp(-(8h/H) * (1 - l/L))
/// Without the layer temperature the factor (1 - l/L) is dropped.
double decay_rate(std::size_t head, std::size_t layer, std::size_t heads, std::size_t layers,
                  bool with_temperature = true);

/// Frozen per-(head, layer) decay table.
class DecaySchedule {
 public:
  DecaySchedule() = default;
  DecaySchedule(std::size_t heads, std::size_t layers, bool with_temperature = true);

  std::size_t heads() const noexcept { return heads_; }
  std::size_t layers() const noexcept { return layers_; }
  bool with_temperature() const noexcept { return with_temperature_; }

  /// 1-based head and layer, matching the closed form.
  double lambda(std::size_t head, std::size_t layer) const;

  /// CSV with header h,l,lambda, one row per (head, layer).
  void write_csv(std::ostream& out) const;

 private:
  std::size_t heads_ = 0;
  std::size_t layers_ = 0;
  bool with_temperature_ = true;
  std::vector<double> table_;  // [head - 1][layer - 1]
};

/// Rotation angles for relative positional encoding, one per feature pair.
struct LrpeParams {
  MatrixD theta;  // 1 x (d / 2)
  bool learnable = true;

  /// theta_j = base^(-2j/d), the usual geometric spacing.
  static LrpeParams geometric(std::size_t head_dim, double base = 10000.0);

  std::size_t head_dim() const noexcept { return 2 * theta.cols(); }
};

/// Rotates feature pair (x_2j, x_2j+1) of row t by theta_j * (t + offset).
/// Inner products of rotated rows t and s then depend on t - s only.
template <typename T>
Matrix<T> apply_lrpe(const Matrix<T>& x, const LrpeParams& params, std::size_t offset = 0);

/// Backward of apply_lrpe. `y` is the rotated output, `dy` its gradient.
/// Returns dX and adds the theta gradient into `dtheta` (1 x d/2).
MatrixD apply_lrpe_backward(const MatrixD& y, const MatrixD& dy, const LrpeParams& params,
                            std::size_t offset, MatrixD& dtheta);

enum class PeMode {
  mix,         // LRPE-d on the first layer, decay only elsewhere
  lrpe_all,    // LRPE-d everywhere
  decay_only,  // no rotation anywhere
};

enum class LayerPe { lrpe_d, decay_only };

/// Positional treatment of 1-based layer l of L.
LayerPe layer_pe_policy(std::size_t layer, std::size_t layers, PeMode mode = PeMode::mix);

const char* to_string(PeMode mode);
PeMode parse_pe_mode(const std::string& name);

}  // namespace lightning
