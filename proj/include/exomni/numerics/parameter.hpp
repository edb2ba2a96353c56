// Copyright 2026 The exomni-desk Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "exomni/numerics/rng.hpp"
#include "exomni/numerics/tensor.hpp"

namespace exomni::numerics {

// A learnable tensor with its gradient accumulator. Backward passes only
// accumulate into trainable parameters, so a frozen parameter's gradient stays
// zero and the optimizer never touches its value.
struct Parameter {
  Tensor value;
  Tensor grad;
  bool trainable = true;
  // Decoupled weight decay applies only where this is set (matrix weights).
  bool decay = false;

  Parameter() = default;
  explicit Parameter(Tensor v, bool decay_flag = false)
      : value(std::move(v)), grad(value.shape()), decay(decay_flag) {}

  void zero_grad() { grad.fill(0.0); }
  void accumulate(const Tensor& g);
};

struct NamedParameter {
  std::string name;
  Parameter* param;
};
using ParameterList = std::vector<NamedParameter>;

void zero_grads(const ParameterList& params);
void set_trainable(const ParameterList& params, bool trainable);
std::size_t count_elements(const ParameterList& params);

// Initializers. All draw from the supplied generator in row-major order.
Parameter normal_param(std::vector<std::size_t> shape, double stddev, Rng& rng, bool decay = true);
Parameter zeros_param(std::vector<std::size_t> shape);
Parameter constant_param(std::vector<std::size_t> shape, double value);

}  // namespace exomni::numerics
