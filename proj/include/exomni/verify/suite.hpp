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

namespace exomni::verify {

enum class Suite { kGradients, kInvariants, kAll };
Suite parse_suite(const std::string& text);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  std::uint64_t seed = 0;
  std::size_t seeds = 3;  // gradient checks run for seed, seed+1, ...
  std::function<void(const CheckResult&)> on_result;
};

// Finite-difference checks over every trainable module (primitives,
// attention, transformer block, fusion, reasoner with projector, unit
// generator, face decoder, and each training loss end to end).
std::vector<CheckResult> gradient_checks(const SuiteOptions& opts);
// Closed-form and property checks: fusion identity, periodic rotary
// positions, loss hand cases, stage schedule, metric arithmetic, corpus and
// checkpoint determinism.
std::vector<CheckResult> invariant_checks(const SuiteOptions& opts);

std::vector<CheckResult> run_suite(Suite suite, const SuiteOptions& opts);

}  // namespace exomni::verify
