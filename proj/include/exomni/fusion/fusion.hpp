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

#include <string>
#include <vector>

#include "exomni/nn/layers.hpp"

// Token-as-query gated fusion. The token sequence is always the query; the
// context only supplies keys and values, so the output has the query's length.
//
//   Fuse(Q, C) = Q + concat_h( sigmoid(Q Wg_h + bg_h) * Attn_h(Q, C) ) Wo
//
// The gate is computed from the raw query rows and multiplies each head's
// attention output element-wise before the output projection.
namespace exomni::fusion {

using numerics::Parameter;
using numerics::ParameterList;
using numerics::Rng;
using numerics::Tensor;

struct FusionConfig {
  std::size_t d_model = 64;
  // Width of the context rows; 0 means d_model.
  std::size_t d_context = 0;
  std::size_t heads = 4;
  // Pre-norm of Q and C before the attention projections. The residual and
  // the gate always see the raw Q.
  bool layer_norm = true;

  std::size_t context_dim() const { return d_context == 0 ? d_model : d_context; }
  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;
};

class FusionBlock {
 public:
  struct Cache {
    Tensor q_in, c_in;
    numerics::LayerNormCache ln_q, ln_c;
    Tensor qn, cn;
    std::vector<Tensor> qh, kh, vh;
    std::vector<numerics::AttentionCache> attn;
    Tensor attn_concat;  // M x d, ungated head outputs
    Tensor gates;        // M x d, sigmoid outputs
    Tensor gated;        // gates * attn_concat
  };
  struct Grads {
    Tensor dq, dc;
  };

  FusionBlock() = default;
  FusionBlock(const FusionConfig& cfg, Rng& rng, double init_std);

  Tensor forward(const Tensor& q, const Tensor& c, Cache* cache = nullptr) const;
  Grads backward(const Cache& cache, const Tensor& dy);

  // Gate values sigmoid(Q Wg + bg) with shape M x heads x head_dim.
  Tensor gate_activations(const Tensor& q) const;

  void collect(ParameterList& out, const std::string& prefix);
  void zero_value_projection() { wv.value.fill(0.0); }
  const FusionConfig& config() const { return cfg_; }

  Parameter wq, wk, wv, wo;
  Parameter wg, bg;
  nn::LayerNorm ln_q, ln_c;

 private:
  void check_inputs(const Tensor& q, const Tensor& c) const;
  Tensor gate_logits(const Tensor& q) const;

  FusionConfig cfg_;
};

// Blocks applied in order; the query stream is threaded through while the
// context is held fixed.
class FusionStack {
 public:
  using Cache = std::vector<FusionBlock::Cache>;

  FusionStack() = default;
  FusionStack(std::size_t depth, const FusionConfig& cfg, Rng& rng, double init_std);

  Tensor forward(const Tensor& q, const Tensor& c, Cache* cache = nullptr) const;
  FusionBlock::Grads backward(const Cache& cache, const Tensor& dy);

  void collect(ParameterList& out, const std::string& prefix);
  void zero_value_projections();
  std::size_t depth() const { return blocks.size(); }

  std::vector<FusionBlock> blocks;
};

// Free-function forms of the module's operations.
inline Tensor fuse_block(const FusionBlock& block, const Tensor& q, const Tensor& c) {
  return block.forward(q, c);
}
inline Tensor fuse_stack(const FusionStack& stack, const Tensor& q, const Tensor& c) {
  return stack.forward(q, c);
}
inline Tensor gate_activations(const FusionBlock& block, const Tensor& q) {
  return block.gate_activations(q);
}

}  // namespace exomni::fusion
