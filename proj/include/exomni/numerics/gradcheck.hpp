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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "exomni/numerics/parameter.hpp"

namespace exomni::numerics {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // 0 checks every element; otherwise a seeded subset of this many elements
  // per parameter (always including the largest-magnitude analytic entry).
  std::size_t max_elements_per_param = 0;
  std::uint64_t sample_seed = 0;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t elements_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  double max_rel_error() const;
  bool passed() const { return max_rel_error() < tolerance; }
  std::string summary() const;
};

// Compares analytic gradients against central differences
//   n = (f(theta + h) - f(theta - h)) / (2h)
// with relative error |a - n| / max(|a|, |n|, 1e-8).
//
// `loss_and_grad` must run the forward pass, accumulate gradients into the
// parameters' `grad`, and return the scalar loss. The checker zeroes gradients
// before the analytic pass and restores every perturbed value exactly.
// Throws DeterminismError when two evaluations at the same point differ.
GradCheckReport finite_diff_check(const std::function<double()>& loss_and_grad,
                                  const ParameterList& params,
                                  const GradCheckOptions& options = {});

}  // namespace exomni::numerics
