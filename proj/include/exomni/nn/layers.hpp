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

#include "exomni/numerics/ops.hpp"
#include "exomni/numerics/parameter.hpp"
#include "exomni/numerics/rng.hpp"

// Building blocks shared by the reasoner, the unit generator and the face
// decoder: affine maps, layer norm, multi-head self-attention and pre-norm
// transformer blocks, each with an explicit cache-based backward pass.
namespace exomni::nn {

using numerics::NamedParameter;
using numerics::Parameter;
using numerics::ParameterList;
using numerics::Rng;
using numerics::Tensor;

inline constexpr double kDefaultInitStd = 0.02;

struct Linear {
  Parameter weight;
  std::optional<Parameter> bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, double init_std, bool with_bias = true);

  std::size_t in_features() const { return weight.value.rows(); }
  std::size_t out_features() const { return weight.value.cols(); }

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy);
  void collect(ParameterList& out, const std::string& prefix);
};

struct LayerNorm {
  Parameter gamma;
  Parameter beta;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t d);

  Tensor forward(const Tensor& x, numerics::LayerNormCache* cache) const;
  Tensor backward(const numerics::LayerNormCache& cache, const Tensor& dy);
  void collect(ParameterList& out, const std::string& prefix);
};

struct AttentionSpec {
  std::size_t d_model = 64;
  std::size_t heads = 4;
  bool causal = false;
  // Standard RoPE on per-head queries and keys when set.
  bool rope = true;
  double rope_base = 10000.0;

  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;
};

class MultiHeadSelfAttention {
 public:
  struct Cache {
    Tensor x;
    std::vector<Tensor> q, k, v;  // per head, after rotation
    std::vector<numerics::AttentionCache> attn;
    Tensor concat;
  };

  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(const AttentionSpec& spec, Rng& rng, double init_std);

  Tensor forward(const Tensor& x, std::span<const double> positions, Cache* cache) const;
  Tensor backward(const Cache& cache, std::span<const double> positions, const Tensor& dy);
  void collect(ParameterList& out, const std::string& prefix);

  const AttentionSpec& spec() const { return spec_; }

  Parameter wq, wk, wv, wo;

 private:
  AttentionSpec spec_;
};

// x1 = x + Attn(LN1(x));  y = x1 + W2 GELU(W1 LN2(x1))
class TransformerBlock {
 public:
  struct Cache {
    numerics::LayerNormCache ln1, ln2;
    Tensor h1;
    MultiHeadSelfAttention::Cache attn;
    Tensor h2, pre_act, act;
  };

  TransformerBlock() = default;
  TransformerBlock(const AttentionSpec& spec, Rng& rng, double init_std);

  Tensor forward(const Tensor& x, std::span<const double> positions, Cache* cache) const;
  Tensor backward(const Cache& cache, std::span<const double> positions, const Tensor& dy);
  void collect(ParameterList& out, const std::string& prefix);

  // Zeroes the output projections of both residual branches so the block is
  // the identity map.
  void zero_residual_branches();

  LayerNorm ln1, ln2;
  MultiHeadSelfAttention attn;
  Linear fc1, fc2;
};

class TransformerStack {
 public:
  using Cache = std::vector<TransformerBlock::Cache>;

  TransformerStack() = default;
  TransformerStack(std::size_t depth, const AttentionSpec& spec, Rng& rng, double init_std);

  Tensor forward(const Tensor& x, std::span<const double> positions, Cache* cache) const;
  Tensor backward(const Cache& cache, std::span<const double> positions, const Tensor& dy);
  void collect(ParameterList& out, const std::string& prefix);

  std::size_t depth() const { return blocks.size(); }

  std::vector<TransformerBlock> blocks;
};

// Embedding table lookup with scatter-add backward.
struct Embedding {
  Parameter table;  // vocab x d

  Embedding() = default;
  Embedding(std::size_t vocab, std::size_t d, Rng& rng, double init_std);

  std::size_t vocab() const { return table.value.rows(); }
  std::size_t dim() const { return table.value.cols(); }

  Tensor forward(std::span<const std::size_t> ids) const;
  void backward(std::span<const std::size_t> ids, const Tensor& dy);
  void collect(ParameterList& out, const std::string& prefix);
};

}  // namespace exomni::nn
