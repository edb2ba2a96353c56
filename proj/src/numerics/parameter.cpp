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

#include "exomni/numerics/parameter.hpp"

#include "exomni/errors.hpp"

namespace exomni::numerics {

void Parameter::accumulate(const Tensor& g) {
  if (g.size() != grad.size()) {
    throw ShapeError("gradient " + g.shape_string() + " for parameter " + value.shape_string());
  }
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

void zero_grads(const ParameterList& params) {
  for (const auto& p : params) p.param->zero_grad();
}

void set_trainable(const ParameterList& params, bool trainable) {
  for (const auto& p : params) p.param->trainable = trainable;
}

std::size_t count_elements(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.param->value.size();
  return n;
}

Parameter normal_param(std::vector<std::size_t> shape, double stddev, Rng& rng, bool decay) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = stddev * rng.normal();
  return Parameter(std::move(t), decay);
}

Parameter zeros_param(std::vector<std::size_t> shape) { return Parameter(Tensor(std::move(shape))); }

Parameter constant_param(std::vector<std::size_t> shape, double value) {
  return Parameter(Tensor(std::move(shape), value));
}

}  // namespace exomni::numerics
