# Copyright 2026 The Lightning Attention Authors
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Tiled causal linear attention (forward and backward, with decay) and oracles."""

from lightning_attention._core import (
    apply_lrpe,
    decay_rate,
    decay_schedule,
    left_product_forward,
    lightning_backward,
    lightning_backward_decay,
    lightning_forward,
    lightning_forward_decay,
    reference_backward,
    right_product_forward,
    srmsnorm,
)

__all__ = [
    "apply_lrpe",
    "decay_rate",
    "decay_schedule",
    "left_product_forward",
    "lightning_backward",
    "lightning_backward_decay",
    "lightning_forward",
    "lightning_forward_decay",
    "reference_backward",
    "right_product_forward",
    "srmsnorm",
]
