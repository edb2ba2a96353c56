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

#include "exomni/units/generator.hpp"

#include "exomni/errors.hpp"

namespace exomni::units {

UnitGenerator::UnitGenerator(const UnitGeneratorConfig& cfg, Rng& rng, double init_std)
    : cfg_(cfg) {
  token_embed = nn::Embedding(cfg.text_vocab, cfg.d_model, rng, init_std);
  fusion::FusionConfig fc;
  fc.d_model = cfg.d_model;
  fc.d_context = cfg.d_context;
  fc.heads = cfg.heads;
  fc.layer_norm = cfg.fusion_layer_norm;
  fusion = fusion::FusionStack(cfg.fusion_depth, fc, rng, init_std);

  nn::PrefixDecoderConfig dc;
  dc.input_vocab = cfg.unit_vocab + 2;   // units, end, start
  dc.output_vocab = cfg.unit_vocab + 1;  // units, end
  dc.d_model = cfg.d_model;
  dc.layers = cfg.layers;
  dc.heads = cfg.heads;
  dc.rope_base = cfg.rope_base;
  dc.start_token = cfg.start_unit();
  dc.end_token = cfg.end_unit();
  dc.aligned_positions = cfg.aligned_positions;
  decoder = nn::PrefixDecoder(dc, rng, init_std);
}

Tensor UnitGenerator::condition(const semantic::TokenSequence& tokens, const Tensor& h,
                                ConditionCache* cache) const {
  if (tokens.ids.size() != h.rows()) {
    throw AlignmentError("condition: " + std::to_string(tokens.ids.size()) +
                         " tokens but H has " + std::to_string(h.rows()) + " rows");
  }
  const Tensor emb = token_embed.forward(tokens.ids);
  if (cache) cache->tokens = tokens.ids;
  return fusion.forward(emb, h, cache ? &cache->fusion : nullptr);
}

Tensor UnitGenerator::condition_backward(const ConditionCache& cache,
                                         const Tensor& d_conditioned) {
  auto g = fusion.backward(cache.fusion, d_conditioned);
  token_embed.backward(cache.tokens, g.dq);
  return g.dc;
}

void UnitGenerator::check_units(const UnitSequence& seq) const {
  for (std::size_t u : seq.units) {
    if (u >= cfg_.unit_vocab) {
      throw IndexError("unit id " + std::to_string(u) + " outside [0, " +
                       std::to_string(cfg_.unit_vocab) + ")");
    }
  }
}

GeneratorTrace UnitGenerator::generate_units(const Tensor& conditioned, std::size_t max_units,
                                             const DecodeOptions& decode) const {
  auto decoded = decoder.decode(conditioned, max_units, decode);
  GeneratorTrace trace;
  trace.units.units = std::move(decoded.tokens);
  trace.units.unit_rate = cfg_.unit_rate;
  trace.hidden = std::move(decoded.hidden);
  return trace;
}

nn::PrefixDecoder::Pass UnitGenerator::teacher_force(const Tensor& conditioned,
                                                     const UnitSequence& target) const {
  check_units(target);
  return decoder.teacher_force(conditioned, target.units);
}

double UnitGenerator::unit_nll(const Tensor& conditioned, const UnitSequence& target) const {
  if (target.units.empty()) throw ArgumentError("unit_nll: empty target");
  return decoder.loss(teacher_force(conditioned, target));
}

void UnitGenerator::collect(ParameterList& out, const std::string& prefix) {
  token_embed.collect(out, prefix + ".token_embed");
  fusion.collect(out, prefix + ".fusion");
  decoder.collect(out, prefix + ".decoder");
}

}  // namespace exomni::units
