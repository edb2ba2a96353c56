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
#include <span>
#include <string>
#include <vector>

#include "exomni/nn/layers.hpp"
#include "exomni/nn/prefix_decoder.hpp"

// Desk-scale stand-ins for the speech projector and the LLM reasoner. The
// frozen speech encoder is replaced by externally supplied feature frames.
namespace exomni::semantic {

using nn::DecodeOptions;
using numerics::ParameterList;
using numerics::Rng;
using numerics::Tensor;

// Text vocabulary layout shared by the corpus and the reasoner.
inline constexpr std::size_t kEosToken = 0;
inline constexpr std::size_t kAsrTaskToken = 1;
inline constexpr std::size_t kTtsTaskToken = 2;
inline constexpr std::size_t kChatTaskToken = 3;
inline constexpr std::size_t kFirstContentToken = 8;

inline constexpr std::size_t kProjectorGroup = 5;

// Stand-in for encoder output E(a): T_enc x d_enc.
struct SpeechFeatures {
  Tensor frames;
};

enum class TokenRole { kPrompt, kResponse };

struct TokenSequence {
  std::vector<std::size_t> ids;
  TokenRole role = TokenRole::kPrompt;
};

struct ReasonerOutput {
  TokenSequence tokens;
  Tensor hidden;  // one row per response token
};

// Right-pads with zero frames to a multiple of `group` and concatenates each
// group of consecutive frames into one row: ceil(T/group) x (group * d_enc).
Tensor group_frames(const Tensor& frames, std::size_t group = kProjectorGroup);

// Two affine layers with a ReLU between, applied to grouped frames.
class SpeechProjector {
 public:
  struct Cache {
    Tensor grouped, pre_act, act;
  };

  SpeechProjector() = default;
  SpeechProjector(std::size_t d_enc, std::size_t d_model, Rng& rng, double init_std);

  Tensor forward(const SpeechFeatures& f, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const Tensor& dy);
  void collect(ParameterList& out, const std::string& prefix);

  std::size_t d_enc() const { return fc1.in_features() / kProjectorGroup; }

  nn::Linear fc1, fc2;
};

struct ReasonerConfig {
  std::size_t vocab = 128;
  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  double rope_base = 10000.0;
};

// Small pre-norm causal transformer over [Emb(x); X_s] followed by the
// response tokens, with standard RoPE over the concatenated sequence.
class Reasoner {
 public:
  Reasoner() = default;
  Reasoner(const ReasonerConfig& cfg, Rng& rng, double init_std);

  Tensor embed_tokens(std::span<const std::size_t> ids) const;
  void embed_backward(std::span<const std::size_t> ids, const Tensor& dy);

  void collect(ParameterList& out, const std::string& prefix);
  const ReasonerConfig& config() const { return cfg_; }

  nn::PrefixDecoder decoder;

 private:
  ReasonerConfig cfg_;
};

Tensor project_speech(const SpeechFeatures& f, const SpeechProjector& projector);

// X = [Emb(x); X_s]; speech rows are optional.
Tensor build_unified_input(const TokenSequence& x, const std::optional<Tensor>& speech,
                           const Reasoner& reasoner);

ReasonerOutput reason(const Tensor& x, const Reasoner& reasoner, std::size_t max_tokens,
                      const DecodeOptions& decode = DecodeOptions::greedy());

}  // namespace exomni::semantic
