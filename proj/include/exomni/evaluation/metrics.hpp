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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exomni/face/blendshape.hpp"
#include "exomni/numerics/tensor.hpp"

namespace exomni::evaluation {

using numerics::Tensor;

// Linear blendshape rig: V = V0 + sum_k y_k * Delta_k.
struct Rig {
  Tensor base;                 // N_v x 3
  std::vector<Tensor> deltas;  // 52 of N_v x 3
  std::vector<std::size_t> lip_indices;

  std::size_t vertex_count() const { return base.rows(); }
  void validate() const;
};

// Seeded stand-in rig: `vertices` vertices, the first `lips` of them tagged as
// lip vertices, deltas drawn N(0, 1) / sqrt(3) so each delta row has unit
// expected norm.
Rig make_default_rig(std::uint64_t seed = 7, std::size_t vertices = 16, std::size_t lips = 4);

Tensor expand_vertices(const Rig& rig, std::span<const double> frame);

// Mean over samples of the mean over frames of the maximum lip-vertex L2
// distance. Each pair is truncated to min(T_pred, T_ref) frames.
double lve(const std::vector<face::BlendshapeClip>& pred,
           const std::vector<face::BlendshapeClip>& ref, const Rig& rig);

// ---- human A/B preference aggregation ------------------------------------

enum class Preference { kA, kB, kTie };

struct RatingSheet {
  std::size_t raters = 0;
  // labels[p] holds exactly `raters` labels for pair p.
  std::vector<std::vector<Preference>> labels;

  void validate() const;
};

struct AbSummary {
  double win = 0.0;      // % of pairs whose majority is A
  double tie = 0.0;      // % of pairs whose majority is Tie
  double overall = 0.0;  // win + 0.5 * tie
  double mmf = 0.0;      // mean % of ratings that match the pair majority
};

// Plurality vote per pair; a tie between plurality labels resolves to Tie.
Preference pair_majority(std::span<const Preference> labels);
AbSummary ab_aggregate(const RatingSheet& sheet);

// ---- latency --------------------------------------------------------------

struct LatencyRecord {
  double t_e2e = 0.0;
  double t_speech = 0.0;
  double t_first_unit = 0.0;
  double t_face_extra = 0.0;
};

struct LatencySummary {
  std::optional<double> rtf;  // absent when no record has t_speech > 0
  double ttft = 0.0;
  double face_latency = 0.0;
  std::size_t excluded = 0;   // records dropped from the RTF mean
};

LatencySummary latency_metrics(const std::vector<LatencyRecord>& records);

// ---- word error rate ------------------------------------------------------

std::size_t edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp);
double wer(std::span<const std::string> ref, std::span<const std::string> hyp);
std::vector<std::string> split_words(const std::string& text);

}  // namespace exomni::evaluation
