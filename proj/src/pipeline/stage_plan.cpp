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

#include "exomni/pipeline/stage_plan.hpp"

#include <algorithm>

#include "exomni/errors.hpp"

namespace exomni::pipeline {

Stage parse_stage(const std::string& text) {
  if (text == "I" || text == "1") return Stage::kI;
  if (text == "II" || text == "2") return Stage::kII;
  if (text == "III" || text == "3") return Stage::kIII;
  if (text == "IV" || text == "4") return Stage::kIV;
  throw ArgumentError("unknown stage '" + text + "' (expected I, II, III or IV)");
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::kI: return "I";
    case Stage::kII: return "II";
    case Stage::kIII: return "III";
    case Stage::kIV: return "IV";
  }
  return "?";
}

std::string group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kSpeechEncoder: return "speech_encoder";
    case ParamGroup::kSpeechProjector: return "speech_projector";
    case ParamGroup::kReasoner: return "reasoner";
    case ParamGroup::kUnitGenerator: return "unit_generator";
    case ParamGroup::kFaceDecoder: return "face_decoder";
    case ParamGroup::kSpeechDecoder: return "speech_decoder";
  }
  return "?";
}

ParamGroup parse_group(const std::string& text) {
  for (ParamGroup g : kAllGroups) {
    if (group_name(g) == text) return g;
  }
  throw ArgumentError("unknown parameter group '" + text + "'");
}

std::vector<ParamGroup> StagePlan::trainable_groups() const {
  std::vector<ParamGroup> out;
  for (ParamGroup g : kAllGroups) {
    if (group(g).trainable) out.push_back(g);
  }
  return out;
}

StagePlan stage_plan(Stage stage, const StageOverrides& o) {
  StagePlan p;
  p.stage = stage;
  auto train = [&p](ParamGroup g, double lr) { p.group(g) = {true, lr}; };
  switch (stage) {
    case Stage::kI:
      train(ParamGroup::kSpeechProjector, 1e-3);
      p.epochs = 1;
      p.batch_size = 128;
      p.warmup_ratio = 0.3;
      p.grad_accum = 1;
      break;
    case Stage::kII:
      train(ParamGroup::kUnitGenerator, 1e-4);
      p.epochs = 3;
      p.batch_size = 128;
      p.warmup_ratio = 0.1;
      p.grad_accum = 1;
      break;
    case Stage::kIII:
      train(ParamGroup::kFaceDecoder, 1e-3);
      p.epochs = 10;
      p.batch_size = 128;
      p.warmup_ratio = 0.1;
      p.grad_accum = 1;
      break;
    case Stage::kIV:
      // The published row lists lr 0 for the unfrozen projector; it follows
      // the reasoner rate here.
      train(ParamGroup::kSpeechProjector, 2e-6);
      train(ParamGroup::kReasoner, 2e-6);
      train(ParamGroup::kUnitGenerator, 5e-5);
      train(ParamGroup::kFaceDecoder, 5e-5);
      p.epochs = 3;
      p.batch_size = 8;
      p.warmup_ratio = 0.1;
      p.grad_accum = 4;
      break;
  }

  for (const auto& [g, trainable] : o.trainable) {
    if ((g == ParamGroup::kSpeechEncoder || g == ParamGroup::kSpeechDecoder) && trainable) {
      throw ConfigError("stage " + stage_name(stage) + ": " + group_name(g) +
                        " is frozen in every stage");
    }
    if (trainable && p.group(g).lr == 0.0) {
      throw ConfigError("stage " + stage_name(stage) + ": " + group_name(g) +
                        " has no learning rate in this stage");
    }
    p.group(g).trainable = trainable;
  }
  if (o.epochs) p.epochs = *o.epochs;
  if (o.batch_size) p.batch_size = *o.batch_size;
  if (o.grad_accum) p.grad_accum = *o.grad_accum;
  if (o.max_steps) p.max_steps = *o.max_steps;
  if (o.warmup_ratio) p.warmup_ratio = *o.warmup_ratio;
  if (o.lr_scale) {
    if (!(*o.lr_scale > 0.0)) throw ConfigError("lr_scale must be positive");
    for (auto& g : p.groups) g.lr *= *o.lr_scale;
  }
  if (p.epochs < 1 || p.batch_size < 1 || p.grad_accum < 1) {
    throw ConfigError("stage " + stage_name(stage) + ": epochs, batch size and accumulation must be >= 1");
  }
  if (p.warmup_ratio < 0.0 || p.warmup_ratio > 1.0) {
    throw ConfigError("warmup ratio must lie in [0, 1]");
  }
  return p;
}

double warmup_lr(double base, std::size_t step, double warmup_ratio, std::size_t total_steps) {
  const double warm = warmup_ratio * static_cast<double>(total_steps);
  if (warm <= 0.0) return base;
  return base * std::min(1.0, static_cast<double>(step) / warm);
}

}  // namespace exomni::pipeline
