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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <tuple>

#include "lightning/layers.hpp"
#include "lightning/lightning.hpp"
#include "lightning/positional.hpp"
#include "lightning/reference.hpp"

namespace py = pybind11;
using namespace lightning;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

MatrixD to_matrix(const Array& a, const char* name) {
  if (a.ndim() != 2)
    throw ShapeError(std::string(name) + " must be 2-D, got " + std::to_string(a.ndim()) + "-D");
  MatrixD m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy_n(a.data(), m.size(), m.data());
  return m;
}

Array to_array(const MatrixD& m) {
  Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy_n(m.data(), m.size(), out.mutable_data());
  return out;
}

py::tuple to_tuple(const GradBundle<double>& g) {
  return py::make_tuple(to_array(g.dq), to_array(g.dk), to_array(g.dv));
}

AttentionConfig config(std::size_t block, double lambda) {
  AttentionConfig c;
  c.block_size = block;
  c.lambda = lambda;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lightning Attention kernels and reference oracles (float64).";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "lightning_forward",
      [](const Array& q, const Array& k, const Array& v, std::size_t block_size) {
        return to_array(lightning_forward(to_matrix(q, "q"), to_matrix(k, "k"), to_matrix(v, "v"),
                                          config(block_size, 1.0)));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("block_size") = 0,
      "Causal linear attention O = [(Q K^T) . M] V computed block by block.");
  m.def(
      "lightning_forward_decay",
      [](const Array& q, const Array& k, const Array& v, double decay, std::size_t block_size) {
        return to_array(lightning_forward_decay(to_matrix(q, "q"), to_matrix(k, "k"),
                                                to_matrix(v, "v"), config(block_size, decay)));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("decay"), py::arg("block_size") = 0);
  m.def(
      "lightning_backward",
      [](const Array& q, const Array& k, const Array& v, const Array& d_out, std::size_t block_size) {
        return to_tuple(lightning_backward(to_matrix(q, "q"), to_matrix(k, "k"), to_matrix(v, "v"),
                                           to_matrix(d_out, "d_out"), config(block_size, 1.0)));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("d_out"), py::arg("block_size") = 0,
      "Returns (dQ, dK, dV).");
  m.def(
      "lightning_backward_decay",
      [](const Array& q, const Array& k, const Array& v, const Array& d_out, double decay,
         std::size_t block_size) {
        return to_tuple(lightning_backward_decay(to_matrix(q, "q"), to_matrix(k, "k"),
                                                 to_matrix(v, "v"), to_matrix(d_out, "d_out"),
                                                 config(block_size, decay)));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("d_out"), py::arg("decay"),
      py::arg("block_size") = 0);

  m.def(
      "left_product_forward",
      [](const Array& q, const Array& k, const Array& v, double decay) {
        return to_array(
            left_product_forward(to_matrix(q, "q"), to_matrix(k, "k"), to_matrix(v, "v"), decay));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("decay") = 1.0);
  m.def(
      "right_product_forward",
      [](const Array& q, const Array& k, const Array& v, double decay) {
        return to_array(
            right_product_forward(to_matrix(q, "q"), to_matrix(k, "k"), to_matrix(v, "v"), decay));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("decay") = 1.0);
  m.def(
      "reference_backward",
      [](const Array& q, const Array& k, const Array& v, const Array& d_out, double decay) {
        return to_tuple(reference_backward(to_matrix(q, "q"), to_matrix(k, "k"), to_matrix(v, "v"),
                                           to_matrix(d_out, "d_out"), decay));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("d_out"), py::arg("decay") = 1.0);

  m.def("decay_rate", &decay_rate, py::arg("head"), py::arg("layer"), py::arg("heads"),
        py::arg("layers"), py::arg("with_temperature") = true,
        "Per-head, per-layer decay; head and layer are 1-based.");
  m.def(
      "decay_schedule",
      [](std::size_t heads, std::size_t layers, bool with_temperature) {
        const DecaySchedule s(heads, layers, with_temperature);
        MatrixD out(heads, layers);
        for (std::size_t h = 0; h < heads; ++h)
          for (std::size_t l = 0; l < layers; ++l) out(h, l) = s.lambda(h + 1, l + 1);
        return to_array(out);
      },
      py::arg("heads"), py::arg("layers"), py::arg("with_temperature") = true,
      "heads x layers array of decay rates.");

  m.def(
      "srmsnorm",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        if (x.ndim() != 1) throw ShapeError("srmsnorm expects a 1-D vector");
        const auto y = srmsnorm(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
        py::array_t<double> out(static_cast<py::ssize_t>(y.size()));
        std::copy(y.begin(), y.end(), out.mutable_data());
        return out;
      },
      py::arg("x"));
  m.def(
      "apply_lrpe",
      [](const Array& x, const py::array_t<double, py::array::c_style | py::array::forcecast>& theta,
         std::size_t offset) {
        LrpeParams p;
        p.theta = MatrixD(1, static_cast<std::size_t>(theta.size()));
        std::copy_n(theta.data(), p.theta.size(), p.theta.data());
        return to_array(apply_lrpe(to_matrix(x, "x"), p, offset));
      },
      py::arg("x"), py::arg("theta"), py::arg("offset") = 0,
      "Rotates feature pairs (2j, 2j+1) of row t by theta_j * (t + offset).");
}
