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

#include "exomni/pipeline/optimizer.hpp"

#include <cmath>

#include "exomni/errors.hpp"

namespace exomni::pipeline {

void AdamW::step(const ParameterList& params, std::size_t t,
                 const std::function<double(const std::string&)>& lr_for) {
  if (t < 1) throw ArgumentError("AdamW step index is 1-based");
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
  for (const auto& [name, p] : params) {
    if (!p->trainable) continue;
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient in " + name);
    const double lr = lr_for(name);
    auto [it, inserted] = moments_.try_emplace(name);
    Moments& mo = it->second;
    if (inserted || !mo.m.same_shape(p->value)) {
      mo.m = Tensor(p->value.shape());
      mo.v = Tensor(p->value.shape());
    }
    auto value = p->value.data();
    const auto grad = p->grad.data();
    auto m = mo.m.data();
    auto v = mo.v.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double update = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
      if (p->decay) value[i] -= lr * cfg_.weight_decay * value[i];
      value[i] -= lr * update;
    }
  }
}

}  // namespace exomni::pipeline
