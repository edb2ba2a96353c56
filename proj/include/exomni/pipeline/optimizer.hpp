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

#include <functional>
#include <map>
#include <string>

#include "exomni/numerics/parameter.hpp"

namespace exomni::pipeline {

using numerics::ParameterList;
using numerics::Tensor;

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct Moments {
  Tensor m, v;
};

// AdamW with decoupled weight decay on parameters flagged `decay`. Frozen
// parameters are skipped entirely, so their values and moments never change.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  // One update at 1-based step `t`; `lr_for` maps a parameter name to its
  // learning rate for this step.
  void step(const ParameterList& params, std::size_t t,
            const std::function<double(const std::string&)>& lr_for);

  const AdamWConfig& config() const { return cfg_; }
  std::map<std::string, Moments>& moments() { return moments_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }
  void reset() { moments_.clear(); }

 private:
  AdamWConfig cfg_;
  std::map<std::string, Moments> moments_;
};

}  // namespace exomni::pipeline
