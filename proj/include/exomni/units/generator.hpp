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

#include <span>
#include <string>
#include <vector>

#include "exomni/fusion/fusion.hpp"
#include "exomni/nn/prefix_decoder.hpp"
#include "exomni/semantic/semantic.hpp"

namespace exomni::units {

using nn::DecodeOptions;
using numerics::ParameterList;
using numerics::Rng;
using numerics::Tensor;

inline constexpr double kDefaultUnitRate = 12.5;

struct UnitSequence {
  std::vector<std::size_t> units;
  double unit_rate = kDefaultUnitRate;
};

struct GeneratorTrace {
  UnitSequence units;
  Tensor hidden;  // one final-layer row per generated unit
};

struct UnitGeneratorConfig {
  std::size_t text_vocab = 128;
  std::size_t unit_vocab = 64;
  std::size_t d_model = 64;     // d_g
  std::size_t d_context = 64;   // width of the reasoner hidden states H
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t fusion_depth = 2;
  bool fusion_layer_norm = true;
  double rope_base = 10000.0;
  // Unit stream positions restart at 0 so unit step j shares its rotary
  // phase with conditioning row j.
  bool aligned_positions = true;
  double unit_rate = kDefaultUnitRate;

  std::size_t end_unit() const { return unit_vocab; }
  std::size_t start_unit() const { return unit_vocab + 1; }
};

// Conditioning: H~ = Fuse(Emb_U(tokens), H). Generation: a causal decoder
// over [H~ ; BOS, u_1, ..., u_T] predicting u_j from u_<j and the whole prefix.
class UnitGenerator {
 public:
  struct ConditionCache {
    std::vector<std::size_t> tokens;
    fusion::FusionStack::Cache fusion;
  };

  UnitGenerator() = default;
  UnitGenerator(const UnitGeneratorConfig& cfg, Rng& rng, double init_std);

  Tensor condition(const semantic::TokenSequence& tokens, const Tensor& h,
                   ConditionCache* cache = nullptr) const;
  // Returns dH; accumulates into the embedding and fusion parameters.
  Tensor condition_backward(const ConditionCache& cache, const Tensor& d_conditioned);

  GeneratorTrace generate_units(const Tensor& conditioned, std::size_t max_units,
                                const DecodeOptions& decode = DecodeOptions::greedy()) const;

  nn::PrefixDecoder::Pass teacher_force(const Tensor& conditioned, const UnitSequence& target) const;
  double unit_nll(const Tensor& conditioned, const UnitSequence& target) const;

  void collect(ParameterList& out, const std::string& prefix);
  const UnitGeneratorConfig& config() const { return cfg_; }

  nn::Embedding token_embed;
  fusion::FusionStack fusion;
  nn::PrefixDecoder decoder;

 private:
  void check_units(const UnitSequence& seq) const;

  UnitGeneratorConfig cfg_;
};

}  // namespace exomni::units
