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

#include "lightning/positional.hpp"

#include <cmath>
#include <iomanip>
#include <string>

namespace lightning {

double decay_rate(std::size_t head, std::size_t layer, std::size_t heads, std::size_t layers,
                  bool with_temperature) {
  if (heads == 0 || layers == 0 || head < 1 || head > heads || layer < 1 || layer > layers) {
    throw DomainError("decay_rate: need 1 <= h <= H and 1 <= l <= L, got h=" +
                      std::to_string(head) + " H=" + std::to_string(heads) +
                      " l=" + std::to_string(layer) + " L=" + std::to_string(layers));
  }
  const double head_rate = 8.0 * static_cast<double>(head) / static_cast<double>(heads);
  const double layer_factor =
      with_temperature ? 1.0 - static_cast<double>(layer) / static_cast<double>(layers) : 1.0;
  return std::exp(-head_rate * layer_factor);
}

DecaySchedule::DecaySchedule(std::size_t heads, std::size_t layers, bool with_temperature)
    : heads_(heads), layers_(layers), with_temperature_(with_temperature) {
  table_.reserve(heads * layers);
  for (std::size_t h = 1; h <= heads; ++h)
    for (std::size_t l = 1; l <= layers; ++l)
      table_.push_back(decay_rate(h, l, heads, layers, with_temperature));
}

double DecaySchedule::lambda(std::size_t head, std::size_t layer) const {
  if (head < 1 || head > heads_ || layer < 1 || layer > layers_)
    throw DomainError("DecaySchedule: index out of range");
  return table_[(head - 1) * layers_ + (layer - 1)];
}

void DecaySchedule::write_csv(std::ostream& out) const {
  out << "h,l,lambda\n" << std::setprecision(17);
  for (std::size_t h = 1; h <= heads_; ++h)
    for (std::size_t l = 1; l <= layers_; ++l) out << h << ',' << l << ',' << lambda(h, l) << '\n';
}

LrpeParams LrpeParams::geometric(std::size_t head_dim, double base) {
  if (head_dim == 0 || head_dim % 2 != 0)
    throw ShapeError("LRPE needs an even head dimension, got " + std::to_string(head_dim));
  LrpeParams p;
  p.theta = MatrixD(1, head_dim / 2);
  for (std::size_t j = 0; j < head_dim / 2; ++j)
    p.theta(0, j) = std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(head_dim));
  return p;
}

template <typename T>
Matrix<T> apply_lrpe(const Matrix<T>& x, const LrpeParams& params, std::size_t offset) {
  if (x.cols() % 2 != 0)
    throw ShapeError("apply_lrpe: odd feature dimension " + std::to_string(x.cols()));
  if (params.theta.cols() * 2 != x.cols())
    throw ShapeError("apply_lrpe: " + std::to_string(params.theta.cols()) + " angles for " +
                     std::to_string(x.cols()) + " features");
  Matrix<T> y(x.rows(), x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double pos = static_cast<double>(t + offset);
    for (std::size_t j = 0; j < params.theta.cols(); ++j) {
      const double angle = params.theta(0, j) * pos;
      const double c = std::cos(angle), s = std::sin(angle);
      const double a = x(t, 2 * j), b = x(t, 2 * j + 1);
      y(t, 2 * j) = static_cast<T>(a * c - b * s);
      y(t, 2 * j + 1) = static_cast<T>(a * s + b * c);
    }
  }
  return y;
}

template MatrixF apply_lrpe(const MatrixF&, const LrpeParams&, std::size_t);
template MatrixD apply_lrpe(const MatrixD&, const LrpeParams&, std::size_t);

MatrixD apply_lrpe_backward(const MatrixD& y, const MatrixD& dy, const LrpeParams& params,
                            std::size_t offset, MatrixD& dtheta) {
  if (y.rows() != dy.rows() || y.cols() != dy.cols() || params.theta.cols() * 2 != y.cols())
    throw ShapeError("apply_lrpe_backward: shape mismatch");
  if (dtheta.rows() != 1 || dtheta.cols() != params.theta.cols())
    throw ShapeError("apply_lrpe_backward: dtheta must be 1 x d/2");
  MatrixD dx(y.rows(), y.cols());
  for (std::size_t t = 0; t < y.rows(); ++t) {
    const double pos = static_cast<double>(t + offset);
    for (std::size_t j = 0; j < params.theta.cols(); ++j) {
      const double angle = params.theta(0, j) * pos;
      const double c = std::cos(angle), s = std::sin(angle);
      const double g0 = dy(t, 2 * j), g1 = dy(t, 2 * j + 1);
      // Inverse rotation carries the gradient back to x.
      dx(t, 2 * j) = g0 * c + g1 * s;
      dx(t, 2 * j + 1) = -g0 * s + g1 * c;
      // d(y0, y1)/d angle = (-y1, y0).
      dtheta(0, j) += pos * (-g0 * y(t, 2 * j + 1) + g1 * y(t, 2 * j));
    }
  }
  return dx;
}

LayerPe layer_pe_policy(std::size_t layer, std::size_t layers, PeMode mode) {
  if (layer < 1 || layer > layers)
    throw DomainError("layer_pe_policy: need 1 <= l <= L");
  switch (mode) {
    case PeMode::lrpe_all:
      return LayerPe::lrpe_d;
    case PeMode::decay_only:
      return LayerPe::decay_only;
    case PeMode::mix:
      break;
  }
  return layer == 1 ? LayerPe::lrpe_d : LayerPe::decay_only;
}

const char* to_string(PeMode mode) {
  switch (mode) {
    case PeMode::mix:
      return "mix";
    case PeMode::lrpe_all:
      return "lrpe-d";
    case PeMode::decay_only:
      return "decay-only";
  }
  return "?";
}

PeMode parse_pe_mode(const std::string& name) {
  if (name == "mix") return PeMode::mix;
  if (name == "lrpe-d") return PeMode::lrpe_all;
  if (name == "decay-only") return PeMode::decay_only;
  throw ConfigError("unknown positional mode '" + name + "' (mix, lrpe-d, decay-only)");
}

}  // namespace lightning
