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
#include <span>
#include <string>
#include <vector>

#include "exomni/nn/layers.hpp"

namespace exomni::nn {

// Greedy or seeded ancestral sampling.
struct DecodeOptions {
  enum class Mode { kGreedy, kSampled };
  Mode mode = Mode::kGreedy;
  std::uint64_t seed = 0;
  // The end token is suppressed until this many tokens have been emitted.
  std::size_t min_tokens = 1;
  // Receives every next-token distribution as it is computed.
  std::function<void(const Tensor& probs)> observer;

  static DecodeOptions greedy() { return {}; }
  static DecodeOptions sampled(std::uint64_t seed) {
    DecodeOptions o;
    o.mode = Mode::kSampled;
    o.seed = seed;
    return o;
  }
};

struct PrefixDecoderConfig {
  std::size_t input_vocab = 128;
  std::size_t output_vocab = 128;
  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  double rope_base = 10000.0;
  // Token id fed before the first stream token; none means the last prefix
  // row predicts the first token.
  std::optional<std::size_t> start_token;
  std::size_t end_token = 0;
  // Restart position indices at 0 for the token stream so stream step j
  // shares its rotary phase with prefix row j.
  bool aligned_positions = false;
};

// Causal transformer decoding a token stream after a block of continuous
// prefix rows: [prefix ; embed(start?, t_1..t_T)]. The final-layer (post-norm)
// hidden state at each stream token is exposed alongside the logits.
class PrefixDecoder {
 public:
  // Teacher-forced forward over one sequence, retained for backward.
  struct Pass {
    std::size_t prefix_len = 0;
    std::vector<std::size_t> stream;   // start token (if any) + tokens
    std::vector<std::size_t> targets;  // tokens + end token
    std::vector<double> positions;
    Tensor input;
    TransformerStack::Cache stack;
    numerics::LayerNormCache ln_f;
    Tensor hidden;      // all rows, post final norm
    Tensor pred_rows;   // hidden rows that produce the logits
    Tensor logits;      // (T + 1) x output_vocab

    // Hidden rows aligned with the T target tokens.
    Tensor token_hidden() const;
    std::size_t first_pred_row() const;
    std::size_t first_token_row() const;
  };

  struct Decoded {
    std::vector<std::size_t> tokens;
    Tensor hidden;  // T x d_model
  };

  PrefixDecoder() = default;
  PrefixDecoder(const PrefixDecoderConfig& cfg, Rng& rng, double init_std);

  Pass teacher_force(const Tensor& prefix, std::span<const std::size_t> tokens) const;
  // Mean cross-entropy over the T + 1 predictions (tokens then end token).
  double loss(const Pass& pass) const;
  // Backpropagates `ce_scale * loss` plus an optional upstream gradient on
  // token_hidden(); returns the gradient for the prefix rows.
  Tensor backward(const Pass& pass, double ce_scale, const Tensor* d_token_hidden);

  Decoded decode(const Tensor& prefix, std::size_t max_tokens, const DecodeOptions& opts) const;

  void collect(ParameterList& out, const std::string& prefix);
  const PrefixDecoderConfig& config() const { return cfg_; }

  Embedding embed;
  TransformerStack stack;
  LayerNorm ln_f;
  Linear head;

 private:
  std::vector<double> positions_for(std::size_t prefix_len, std::size_t stream_len) const;
  Tensor forward_hidden(const Tensor& input, std::span<const double> positions,
                        TransformerStack::Cache* stack_cache,
                        numerics::LayerNormCache* ln_cache) const;

  PrefixDecoderConfig cfg_;
};

}  // namespace exomni::nn
