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

#include "exomni/pipeline/model.hpp"

#include <charconv>
#include <cstdio>

#include "exomni/errors.hpp"
#include "exomni/numerics/rng.hpp"

namespace exomni::pipeline {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key " + key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key " + key + ": expected a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key " + key + ": expected true or false, got '" + v + "'");
}

}  // namespace

ModelConfig ModelConfig::desk32() {
  ModelConfig c;
  c.d_model = 32;
  return c;
}

KeyValues ModelConfig::to_kv() const {
  return {
      {"d_enc", std::to_string(d_enc)},
      {"d_model", std::to_string(d_model)},
      {"text_vocab", std::to_string(text_vocab)},
      {"unit_vocab", std::to_string(unit_vocab)},
      {"heads", std::to_string(heads)},
      {"reasoner_layers", std::to_string(reasoner_layers)},
      {"generator_layers", std::to_string(generator_layers)},
      {"fusion_depth", std::to_string(fusion_depth)},
      {"face_encoder_layers", std::to_string(face_encoder_layers)},
      {"fusion_layer_norm", fusion_layer_norm ? "true" : "false"},
      {"init_std", format_double(init_std)},
  };
}

ModelConfig ModelConfig::take_from(KeyValues& kv) {
  ModelConfig c;
  auto take = [&kv](const char* key, auto&& apply) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    apply(it->first, it->second);
    kv.erase(it);
  };
  auto size_key = [&](const char* key, std::size_t& field) {
    take(key, [&](const std::string& k, const std::string& v) { field = parse_size(k, v); });
  };
  size_key("d_enc", c.d_enc);
  size_key("d_model", c.d_model);
  size_key("text_vocab", c.text_vocab);
  size_key("unit_vocab", c.unit_vocab);
  size_key("heads", c.heads);
  size_key("reasoner_layers", c.reasoner_layers);
  size_key("generator_layers", c.generator_layers);
  size_key("fusion_depth", c.fusion_depth);
  size_key("face_encoder_layers", c.face_encoder_layers);
  take("fusion_layer_norm",
       [&](const std::string& k, const std::string& v) { c.fusion_layer_norm = parse_bool(k, v); });
  take("init_std", [&](const std::string& k, const std::string& v) { c.init_std = parse_double(k, v); });
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  if (d_enc < 1 || d_model < 2 || heads < 1 || unit_vocab < 1) {
    throw ConfigError("model config: dimensions must be positive");
  }
  if (d_model % heads != 0 || (d_model / heads) % 2 != 0) {
    throw ConfigError("model config: d_model / heads must be an even integer");
  }
  if (text_vocab <= semantic::kFirstContentToken) {
    throw ConfigError("model config: text_vocab must exceed the reserved control tokens");
  }
  if (!(init_std > 0.0)) throw ConfigError("model config: init_std must be positive");
}

ExOmniModel::ExOmniModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  numerics::Rng proj_rng(numerics::derive_seed(seed, 1));
  numerics::Rng reas_rng(numerics::derive_seed(seed, 2));
  numerics::Rng gen_rng(numerics::derive_seed(seed, 3));
  numerics::Rng face_rng(numerics::derive_seed(seed, 4));

  projector = semantic::SpeechProjector(cfg.d_enc, cfg.d_model, proj_rng, cfg.init_std);

  semantic::ReasonerConfig rc;
  rc.vocab = cfg.text_vocab;
  rc.d_model = cfg.d_model;
  rc.layers = cfg.reasoner_layers;
  rc.heads = cfg.heads;
  reasoner = semantic::Reasoner(rc, reas_rng, cfg.init_std);

  units::UnitGeneratorConfig gc;
  gc.text_vocab = cfg.text_vocab;
  gc.unit_vocab = cfg.unit_vocab;
  gc.d_model = cfg.d_model;
  gc.d_context = cfg.d_model;
  gc.layers = cfg.generator_layers;
  gc.heads = cfg.heads;
  gc.fusion_depth = cfg.fusion_depth;
  gc.fusion_layer_norm = cfg.fusion_layer_norm;
  generator = units::UnitGenerator(gc, gen_rng, cfg.init_std);

  face::FaceDecoderConfig fc;
  fc.unit_vocab = cfg.unit_vocab;
  fc.d_gen = cfg.d_model;
  fc.d_model = cfg.d_model;
  fc.heads = cfg.heads;
  fc.fusion_depth = cfg.fusion_depth;
  fc.encoder_layers = cfg.face_encoder_layers;
  fc.fusion_layer_norm = cfg.fusion_layer_norm;
  face = face::FaceDecoder(fc, face_rng, cfg.init_std);
}

ParameterList ExOmniModel::group(ParamGroup g) {
  ParameterList out;
  switch (g) {
    case ParamGroup::kSpeechProjector: projector.collect(out, "projector"); break;
    case ParamGroup::kReasoner: reasoner.collect(out, "reasoner"); break;
    case ParamGroup::kUnitGenerator: generator.collect(out, "generator"); break;
    case ParamGroup::kFaceDecoder: face.collect(out, "face"); break;
    case ParamGroup::kSpeechEncoder:
    case ParamGroup::kSpeechDecoder: break;
  }
  return out;
}

ParameterList ExOmniModel::all() {
  ParameterList out;
  for (ParamGroup g : kAllGroups) {
    auto part = group(g);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void ExOmniModel::apply_plan(const StagePlan& plan) {
  for (ParamGroup g : kAllGroups) numerics::set_trainable(group(g), plan.group(g).trainable);
}

}  // namespace exomni::pipeline
