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
#include <optional>
#include <vector>

#include "exomni/pipeline/corpus.hpp"
#include "exomni/pipeline/model.hpp"
#include "exomni/pipeline/optimizer.hpp"
#include "exomni/pipeline/stage_plan.hpp"

namespace exomni::pipeline {

// Everything besides the parameters needed to continue a stage bit-exactly.
// Data order and the Stage IV kind draws are pure functions of
// (seed, stage, step), so no generator state has to be carried.
struct TrainState {
  Stage stage = Stage::kI;
  std::size_t step = 0;         // optimizer steps completed in `stage`
  std::size_t total_steps = 0;  // 0 until the stage has started
  bool complete = false;
  std::uint64_t seed = 0;
  AdamW optimizer;
};

struct StepRecord {
  std::size_t step = 0;
  DataKind kind = DataKind::kAsr;
  double loss = 0.0;
  double lr_factor = 0.0;  // warmup multiplier applied to every group rate
};

struct TrainReport {
  std::vector<StepRecord> steps;
};

struct TrainOptions {
  // Stop once this many steps of the stage are done (0 runs to the end).
  std::size_t stop_after = 0;
  std::function<void(const StepRecord&)> on_step;
};

// Data kinds a stage consumes.
std::vector<DataKind> stage_kinds(Stage s);
std::size_t total_steps(const StagePlan& plan, const SyntheticCorpus& corpus);

// Runs (or resumes) `plan` on `model`. A state belonging to a different or
// finished stage starts a fresh stage with reset optimizer moments.
TrainReport train_stage(ExOmniModel& model, const StagePlan& plan, const SyntheticCorpus& corpus,
                        TrainState& state, const TrainOptions& opts = {});

// Mean per-sample loss of `kind` over the first `max_samples` samples (all
// when 0): cross-entropy for ASR and T2T, unit NLL for TTS, l_face for face
// pairs, and text + unit + face for S2S.
double evaluate_loss(ExOmniModel& model, DataKind kind, const SyntheticCorpus& corpus,
                     std::size_t max_samples = 0);

// Loss of sample `index` of `kind`. A nonzero `scale` also accumulates
// scale * d(loss) into every trainable parameter on the sample's path.
double sample_loss(ExOmniModel& model, const SyntheticCorpus& corpus, DataKind kind,
                   std::size_t index, double scale);

struct GenerationResult {
  Tokens response;
  units::GeneratorTrace trace;
  face::BlendshapeClip clip;
};

// Text prompt (and optional speech) -> response tokens -> units -> face clip.
GenerationResult generate(const ExOmniModel& model, const Tokens& prompt,
                          const std::optional<semantic::SpeechFeatures>& speech,
                          std::size_t max_tokens, std::size_t max_units,
                          const nn::DecodeOptions& decode = nn::DecodeOptions::greedy());

// Face decoding from units alone; the generator context is all zeros.
face::BlendshapeClip face_from_units(const ExOmniModel& model, const units::UnitSequence& u);

}  // namespace exomni::pipeline
