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
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace exomni::pipeline {

enum class Stage { kI = 1, kII = 2, kIII = 3, kIV = 4 };

// Accepts "I".."IV" or "1".."4".
Stage parse_stage(const std::string& text);
std::string stage_name(Stage s);

enum class ParamGroup {
  kSpeechEncoder,
  kSpeechProjector,
  kReasoner,
  kUnitGenerator,
  kFaceDecoder,
  kSpeechDecoder,
};
inline constexpr std::size_t kGroupCount = 6;
inline constexpr std::array<ParamGroup, kGroupCount> kAllGroups = {
    ParamGroup::kSpeechEncoder, ParamGroup::kSpeechProjector, ParamGroup::kReasoner,
    ParamGroup::kUnitGenerator, ParamGroup::kFaceDecoder,     ParamGroup::kSpeechDecoder};

std::string group_name(ParamGroup g);
ParamGroup parse_group(const std::string& text);

struct GroupSchedule {
  bool trainable = false;
  double lr = 0.0;
};

struct StagePlan {
  Stage stage = Stage::kI;
  std::array<GroupSchedule, kGroupCount> groups{};
  std::size_t epochs = 1;
  std::size_t batch_size = 128;
  double warmup_ratio = 0.1;
  std::size_t grad_accum = 1;
  // Desk cap on optimizer steps; 0 keeps the epoch-derived count.
  std::size_t max_steps = 0;

  const GroupSchedule& group(ParamGroup g) const { return groups[static_cast<std::size_t>(g)]; }
  GroupSchedule& group(ParamGroup g) { return groups[static_cast<std::size_t>(g)]; }
  std::vector<ParamGroup> trainable_groups() const;
};

// Desk-scale adjustments layered over the published schedule.
struct StageOverrides {
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> grad_accum;
  std::optional<std::size_t> max_steps;
  std::optional<double> warmup_ratio;
  // Multiplies every group learning rate.
  std::optional<double> lr_scale;
  std::vector<std::pair<ParamGroup, bool>> trainable;
};

// Published schedule for `stage` with overrides applied. Unfreezing the speech
// encoder or speech decoder raises ConfigError.
StagePlan stage_plan(Stage stage, const StageOverrides& overrides = {});

// lr at 1-based step s: base * min(1, s / (warmup_ratio * total_steps)).
double warmup_lr(double base, std::size_t step, double warmup_ratio, std::size_t total_steps);

}  // namespace exomni::pipeline
