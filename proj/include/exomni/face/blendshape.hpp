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

#include <array>
#include <string_view>

#include "exomni/numerics/tensor.hpp"

namespace exomni::face {

inline constexpr std::size_t kBlendshapeCount = 52;
inline constexpr double kDefaultFps = 25.0;

// ARKit blendshape names in the fixed column order used by every clip file.
extern const std::array<std::string_view, kBlendshapeCount> kArkitNames;

// T_y x 52 coefficients in [0, 1] sampled at `fps`.
struct BlendshapeClip {
  numerics::Tensor coeffs;
  double fps = kDefaultFps;

  std::size_t frames() const { return coeffs.rank() == 2 ? coeffs.rows() : 0; }
  // Throws ArgumentError unless the clip is T_y >= 1 by 52 with values in
  // [0, 1] and fps > 0.
  void validate() const;
};

}  // namespace exomni::face
