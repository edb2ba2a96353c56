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

#include <cstddef>
#include <span>
#include <vector>

#include "exomni/numerics/tensor.hpp"

namespace exomni::positional {

using numerics::Tensor;

inline constexpr double kRopeBase = 10000.0;

// Position index for the facial decoder: frames exactly `period` apart share
// an encoding.
struct PeriodicRopeConfig {
  std::size_t period = 25;
  double alpha = 1.0;
  double base = kRopeBase;

  void validate() const;
};

// (t mod P) / alpha
double periodic_position(std::size_t t, const PeriodicRopeConfig& cfg);
std::vector<double> periodic_positions(std::size_t count, const PeriodicRopeConfig& cfg);
std::vector<double> linear_positions(std::size_t count, std::size_t offset = 0);

// Rotates each pair (x[2i], x[2i+1]) of row r by positions[r] * base^(-2i/d).
// Throws ConfigError for odd d.
Tensor apply_rope(const Tensor& x, std::span<const double> positions, double base = kRopeBase);
// Backward is the inverse (transpose) rotation of the upstream gradient.
Tensor apply_rope_backward(const Tensor& dy, std::span<const double> positions,
                           double base = kRopeBase);

}  // namespace exomni::positional
