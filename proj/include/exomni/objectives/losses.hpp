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

#include <optional>
#include <vector>

#include "exomni/face/blendshape.hpp"
#include "exomni/numerics/tensor.hpp"

namespace exomni::objectives {

using numerics::Tensor;

inline constexpr double kDefaultLambdaVel = 0.3;

// Predicted/target clips with per-sample valid frame counts. Frames at or
// beyond valid_lengths[i] are padding and never read.
struct FaceBatch {
  std::vector<face::BlendshapeClip> predicted;
  std::vector<face::BlendshapeClip> target;
  std::vector<std::size_t> valid_lengths;

  std::size_t size() const { return predicted.size(); }
  // Throws MaskError / ShapeError when the batch invariants are broken.
  void validate() const;
};

struct LossWeights {
  double lambda_vel = kDefaultLambdaVel;
};

// (1/B) sum_i (1/|T_i|) sum_t ||yhat_t - y_t||^2
double l_bs(const FaceBatch& batch);
// (1/B) sum_i (1/(|T_i|-1)) sum_{t>=2} ||(yhat_t - yhat_{t-1}) - (y_t - y_{t-1})||^2;
// samples with one valid frame contribute 0.
double l_vel(const FaceBatch& batch);
double l_face(const FaceBatch& batch, const LossWeights& w = {});

// d l_face / d predicted, one tensor per sample (zero beyond the valid range).
std::vector<Tensor> l_face_grad(const FaceBatch& batch, const LossWeights& w = {});

struct WeightedTerm {
  double value;
  double weight = 1.0;
};

// sum_k weight_k * value_k + face. Absent terms contribute nothing; any NaN or
// infinite input raises NumericError.
double total_loss(const std::vector<WeightedTerm>& ar_terms, std::optional<double> face);

}  // namespace exomni::objectives
