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
#include <map>
#include <string>

#include "exomni/face/decoder.hpp"
#include "exomni/pipeline/stage_plan.hpp"
#include "exomni/semantic/semantic.hpp"
#include "exomni/units/generator.hpp"

namespace exomni::pipeline {

using numerics::ParameterList;

using KeyValues = std::map<std::string, std::string>;

struct ModelConfig {
  std::size_t d_enc = 16;
  std::size_t d_model = 64;  // shared by reasoner, generator and face decoder
  std::size_t text_vocab = 128;
  std::size_t unit_vocab = 64;
  std::size_t heads = 4;
  std::size_t reasoner_layers = 2;
  std::size_t generator_layers = 2;
  std::size_t fusion_depth = 2;
  std::size_t face_encoder_layers = 2;
  bool fusion_layer_norm = true;
  double init_std = 0.02;

  // Small configuration used by the learnability checks.
  static ModelConfig desk32();

  KeyValues to_kv() const;
  // Reads the model keys out of `kv`, erasing each one it consumes.
  static ModelConfig take_from(KeyValues& kv);
  void validate() const;
};

// Every learnable component plus the mapping from training groups to
// parameters. The speech encoder and speech decoder are external, frozen
// stand-ins and own no parameters.
class ExOmniModel {
 public:
  ExOmniModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  ParameterList group(ParamGroup g);
  ParameterList all();
  // Applies the plan's trainable flags to every group.
  void apply_plan(const StagePlan& plan);

  semantic::SpeechProjector projector;
  semantic::Reasoner reasoner;
  units::UnitGenerator generator;
  face::FaceDecoder face;

 private:
  ModelConfig cfg_;
};

}  // namespace exomni::pipeline
