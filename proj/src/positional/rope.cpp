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

#include "exomni/positional/rope.hpp"

#include <cmath>
#include <string>

#include "exomni/errors.hpp"
#include "exomni/numerics/ops.hpp"

namespace exomni::positional {

void PeriodicRopeConfig::validate() const {
  if (period < 1) throw ConfigError("periodic rope: period must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("periodic rope: alpha must be > 0");
  if (!(base > 1.0)) throw ConfigError("periodic rope: base must be > 1");
}

double periodic_position(std::size_t t, const PeriodicRopeConfig& cfg) {
  return static_cast<double>(t % cfg.period) / cfg.alpha;
}

std::vector<double> periodic_positions(std::size_t count, const PeriodicRopeConfig& cfg) {
  cfg.validate();
  std::vector<double> out(count);
  for (std::size_t t = 0; t < count; ++t) out[t] = periodic_position(t, cfg);
  return out;
}

std::vector<double> linear_positions(std::size_t count, std::size_t offset) {
  std::vector<double> out(count);
  for (std::size_t t = 0; t < count; ++t) out[t] = static_cast<double>(t + offset);
  return out;
}

namespace {

Tensor rotate(const Tensor& x, std::span<const double> positions, double base, double sign) {
  const std::size_t d = x.cols();
  if (d % 2 != 0) throw ConfigError("rope: feature width " + std::to_string(d) + " is odd");
  if (positions.size() != x.rows()) {
    throw ShapeError("rope: " + std::to_string(positions.size()) + " positions for " +
                     std::to_string(x.rows()) + " rows");
  }
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double pos = positions[r];
    if (pos == 0.0) continue;
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double freq = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(d));
      const double angle = sign * pos * freq;
      const double c = std::cos(angle), s = std::sin(angle);
      const double a = x(r, 2 * i), b = x(r, 2 * i + 1);
      out(r, 2 * i) = a * c - b * s;
      out(r, 2 * i + 1) = a * s + b * c;
    }
  }
  return out;
}

}  // namespace

Tensor apply_rope(const Tensor& x, std::span<const double> positions, double base) {
  return rotate(x, positions, base, 1.0);
}

Tensor apply_rope_backward(const Tensor& dy, std::span<const double> positions, double base) {
  Tensor dx = rotate(dy, positions, base, -1.0);
  if (numerics::backward_mutated("rope")) numerics::scale_into(dx, -1.0);
  return dx;
}

}  // namespace exomni::positional
