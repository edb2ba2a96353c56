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

#include "exomni/nn/layers.hpp"

#include <string>

#include "exomni/errors.hpp"
#include "exomni/positional/rope.hpp"

namespace exomni::nn {

using numerics::linear;
using numerics::linear_backward;

// ---- Linear ---------------------------------------------------------------

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, double init_std, bool with_bias)
    : weight(numerics::normal_param({in, out}, init_std, rng)) {
  if (with_bias) bias = numerics::zeros_param({out});
}

Tensor Linear::forward(const Tensor& x) const {
  return linear(x, weight, bias ? &*bias : nullptr);
}

Tensor Linear::backward(const Tensor& x, const Tensor& dy) {
  return linear_backward(x, weight, bias ? &*bias : nullptr, dy);
}

void Linear::collect(ParameterList& out, const std::string& prefix) {
  out.push_back({prefix + ".weight", &weight});
  if (bias) out.push_back({prefix + ".bias", &*bias});
}

// ---- LayerNorm ------------------------------------------------------------

LayerNorm::LayerNorm(std::size_t d)
    : gamma(numerics::constant_param({d}, 1.0)), beta(numerics::zeros_param({d})) {}

Tensor LayerNorm::forward(const Tensor& x, numerics::LayerNormCache* cache) const {
  return numerics::layer_norm(x, gamma, beta, numerics::kLayerNormEps, cache);
}

Tensor LayerNorm::backward(const numerics::LayerNormCache& cache, const Tensor& dy) {
  return numerics::layer_norm_backward(cache, gamma, beta, dy);
}

void LayerNorm::collect(ParameterList& out, const std::string& prefix) {
  out.push_back({prefix + ".gamma", &gamma});
  out.push_back({prefix + ".beta", &beta});
}

// ---- attention ------------------------------------------------------------

void AttentionSpec::validate() const {
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("attention: d_model " + std::to_string(d_model) +
                      " not divisible by heads " + std::to_string(heads));
  }
  if (rope && head_dim() % 2 != 0) {
    throw ConfigError("attention: rotary head width " + std::to_string(head_dim()) + " is odd");
  }
}

MultiHeadSelfAttention::MultiHeadSelfAttention(const AttentionSpec& spec, Rng& rng,
                                               double init_std)
    : spec_(spec) {
  spec_.validate();
  const std::size_t d = spec.d_model;
  wq = numerics::normal_param({d, d}, init_std, rng);
  wk = numerics::normal_param({d, d}, init_std, rng);
  wv = numerics::normal_param({d, d}, init_std, rng);
  wo = numerics::normal_param({d, d}, init_std, rng);
}

Tensor MultiHeadSelfAttention::forward(const Tensor& x, std::span<const double> positions,
                                       Cache* cache) const {
  const std::size_t dh = spec_.head_dim();
  const Tensor q_all = linear(x, wq, nullptr);
  const Tensor k_all = linear(x, wk, nullptr);
  const Tensor v_all = linear(x, wv, nullptr);
  Tensor concat = Tensor::matrix(x.rows(), spec_.d_model);
  Cache local;
  Cache& c = cache ? *cache : local;
  c.q.clear();
  c.k.clear();
  c.v.clear();
  c.attn.assign(spec_.heads, {});
  for (std::size_t h = 0; h < spec_.heads; ++h) {
    Tensor q = numerics::slice_cols(q_all, h * dh, (h + 1) * dh);
    Tensor k = numerics::slice_cols(k_all, h * dh, (h + 1) * dh);
    Tensor v = numerics::slice_cols(v_all, h * dh, (h + 1) * dh);
    if (spec_.rope) {
      q = positional::apply_rope(q, positions, spec_.rope_base);
      k = positional::apply_rope(k, positions, spec_.rope_base);
    }
    const Tensor o = numerics::scaled_dot_attention(q, k, v, spec_.causal, &c.attn[h]);
    numerics::set_cols(concat, o, h * dh);
    c.q.push_back(std::move(q));
    c.k.push_back(std::move(k));
    c.v.push_back(std::move(v));
  }
  Tensor out = linear(concat, wo, nullptr);
  if (cache) {
    c.x = x;
    c.concat = std::move(concat);
  }
  return out;
}

Tensor MultiHeadSelfAttention::backward(const Cache& c, std::span<const double> positions,
                                        const Tensor& dy) {
  const std::size_t dh = spec_.head_dim();
  const Tensor dconcat = linear_backward(c.concat, wo, nullptr, dy);
  Tensor dq_all = Tensor::matrix(c.x.rows(), spec_.d_model);
  Tensor dk_all = Tensor::matrix(c.x.rows(), spec_.d_model);
  Tensor dv_all = Tensor::matrix(c.x.rows(), spec_.d_model);
  for (std::size_t h = 0; h < spec_.heads; ++h) {
    const Tensor dout = numerics::slice_cols(dconcat, h * dh, (h + 1) * dh);
    auto g = numerics::scaled_dot_attention_backward(c.q[h], c.k[h], c.v[h], c.attn[h], dout);
    if (spec_.rope) {
      g.dq = positional::apply_rope_backward(g.dq, positions, spec_.rope_base);
      g.dk = positional::apply_rope_backward(g.dk, positions, spec_.rope_base);
    }
    numerics::set_cols(dq_all, g.dq, h * dh);
    numerics::set_cols(dk_all, g.dk, h * dh);
    numerics::set_cols(dv_all, g.dv, h * dh);
  }
  Tensor dx = linear_backward(c.x, wq, nullptr, dq_all);
  numerics::add_into(dx, linear_backward(c.x, wk, nullptr, dk_all));
  numerics::add_into(dx, linear_backward(c.x, wv, nullptr, dv_all));
  return dx;
}

void MultiHeadSelfAttention::collect(ParameterList& out, const std::string& prefix) {
  out.push_back({prefix + ".wq", &wq});
  out.push_back({prefix + ".wk", &wk});
  out.push_back({prefix + ".wv", &wv});
  out.push_back({prefix + ".wo", &wo});
}

// ---- transformer block ----------------------------------------------------

TransformerBlock::TransformerBlock(const AttentionSpec& spec, Rng& rng, double init_std)
    : ln1(spec.d_model),
      ln2(spec.d_model),
      attn(spec, rng, init_std),
      fc1(spec.d_model, 4 * spec.d_model, rng, init_std),
      fc2(4 * spec.d_model, spec.d_model, rng, init_std) {}

Tensor TransformerBlock::forward(const Tensor& x, std::span<const double> positions,
                                 Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  c.h1 = ln1.forward(x, &c.ln1);
  Tensor x1 = numerics::add(x, attn.forward(c.h1, positions, &c.attn));
  c.h2 = ln2.forward(x1, &c.ln2);
  c.pre_act = fc1.forward(c.h2);
  c.act = numerics::gelu(c.pre_act);
  return numerics::add(x1, fc2.forward(c.act));
}

Tensor TransformerBlock::backward(const Cache& c, std::span<const double> positions,
                                  const Tensor& dy) {
  // Both residual branches pass dy straight through.
  const Tensor dact = fc2.backward(c.act, dy);
  const Tensor dpre = numerics::gelu_backward(c.pre_act, dact);
  const Tensor dh2 = fc1.backward(c.h2, dpre);
  Tensor dx1 = numerics::add(dy, ln2.backward(c.ln2, dh2));
  const Tensor dh1 = attn.backward(c.attn, positions, dx1);
  numerics::add_into(dx1, ln1.backward(c.ln1, dh1));
  return dx1;
}

void TransformerBlock::collect(ParameterList& out, const std::string& prefix) {
  ln1.collect(out, prefix + ".ln1");
  attn.collect(out, prefix + ".attn");
  ln2.collect(out, prefix + ".ln2");
  fc1.collect(out, prefix + ".fc1");
  fc2.collect(out, prefix + ".fc2");
}

void TransformerBlock::zero_residual_branches() {
  attn.wo.value.fill(0.0);
  fc2.weight.value.fill(0.0);
  if (fc2.bias) fc2.bias->value.fill(0.0);
}

TransformerStack::TransformerStack(std::size_t depth, const AttentionSpec& spec, Rng& rng,
                                   double init_std) {
  blocks.reserve(depth);
  for (std::size_t i = 0; i < depth; ++i) blocks.emplace_back(spec, rng, init_std);
}

Tensor TransformerStack::forward(const Tensor& x, std::span<const double> positions,
                                 Cache* cache) const {
  if (cache) cache->assign(blocks.size(), {});
  Tensor h = x;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h = blocks[i].forward(h, positions, cache ? &(*cache)[i] : nullptr);
  }
  return h;
}

Tensor TransformerStack::backward(const Cache& cache, std::span<const double> positions,
                                  const Tensor& dy) {
  Tensor g = dy;
  for (std::size_t i = blocks.size(); i-- > 0;) g = blocks[i].backward(cache[i], positions, g);
  return g;
}

void TransformerStack::collect(ParameterList& out, const std::string& prefix) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].collect(out, prefix + "." + std::to_string(i));
  }
}

// ---- embedding ------------------------------------------------------------

Embedding::Embedding(std::size_t vocab, std::size_t d, Rng& rng, double init_std)
    : table(numerics::normal_param({vocab, d}, init_std, rng)) {}

Tensor Embedding::forward(std::span<const std::size_t> ids) const {
  const std::size_t d = dim();
  Tensor out = Tensor::matrix(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab()) {
      throw IndexError("embedding: id " + std::to_string(ids[i]) + " outside vocabulary of " +
                       std::to_string(vocab()));
    }
    const auto src = table.value.row(ids[i]);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  }
  return out;
}

void Embedding::backward(std::span<const std::size_t> ids, const Tensor& dy) {
  if (!table.trainable) return;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto g = table.grad.row(ids[i]);
    const auto src = dy.row(i);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += src[j];
  }
}

void Embedding::collect(ParameterList& out, const std::string& prefix) {
  out.push_back({prefix + ".table", &table});
}

}  // namespace exomni::nn
