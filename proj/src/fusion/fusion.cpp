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

#include "exomni/fusion/fusion.hpp"

#include "exomni/errors.hpp"

namespace exomni::fusion {

using numerics::linear;
using numerics::linear_backward;

void FusionConfig::validate() const {
  if (heads == 0 || d_model == 0 || d_model % heads != 0) {
    throw ConfigError("fusion: d_model " + std::to_string(d_model) + " not divisible by heads " +
                      std::to_string(heads));
  }
}

FusionBlock::FusionBlock(const FusionConfig& cfg, Rng& rng, double init_std) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.d_model, dc = cfg_.context_dim();
  wq = numerics::normal_param({d, d}, init_std, rng);
  wk = numerics::normal_param({dc, d}, init_std, rng);
  wv = numerics::normal_param({dc, d}, init_std, rng);
  wo = numerics::normal_param({d, d}, init_std, rng);
  wg = numerics::normal_param({d, d}, init_std, rng, /*decay=*/false);
  bg = numerics::zeros_param({d});
  if (cfg_.layer_norm) {
    ln_q = nn::LayerNorm(d);
    ln_c = nn::LayerNorm(dc);
  }
}

void FusionBlock::check_inputs(const Tensor& q, const Tensor& c) const {
  if (q.rank() != 2 || q.cols() != cfg_.d_model) {
    throw ShapeError("fusion: query " + q.shape_string() + " but block width is " +
                     std::to_string(cfg_.d_model));
  }
  if (q.rows() == 0) throw ShapeError("fusion: empty query sequence");
  if (c.rank() != 2 || c.rows() == 0) throw EmptyContextError("fusion: context has no rows");
  if (c.cols() != cfg_.context_dim()) {
    throw ShapeError("fusion: context " + c.shape_string() + " but block context width is " +
                     std::to_string(cfg_.context_dim()));
  }
}

Tensor FusionBlock::gate_logits(const Tensor& q) const { return linear(q, wg, bg); }

Tensor FusionBlock::gate_activations(const Tensor& q) const {
  if (q.rank() != 2 || q.cols() != cfg_.d_model) {
    throw ShapeError("gate_activations: query " + q.shape_string() + " but block width is " +
                     std::to_string(cfg_.d_model));
  }
  Tensor g = numerics::sigmoid(gate_logits(q));
  return Tensor({q.rows(), cfg_.heads, cfg_.head_dim()},
                std::vector<double>(g.data().begin(), g.data().end()));
}

Tensor FusionBlock::forward(const Tensor& q, const Tensor& c, Cache* cache) const {
  check_inputs(q, c);
  Cache local;
  Cache& k = cache ? *cache : local;
  const std::size_t dh = cfg_.head_dim();
  k.qn = cfg_.layer_norm ? ln_q.forward(q, &k.ln_q) : q;
  k.cn = cfg_.layer_norm ? ln_c.forward(c, &k.ln_c) : c;
  const Tensor q_all = linear(k.qn, wq, nullptr);
  const Tensor k_all = linear(k.cn, wk, nullptr);
  const Tensor v_all = linear(k.cn, wv, nullptr);
  k.attn_concat = Tensor::matrix(q.rows(), cfg_.d_model);
  k.qh.clear();
  k.kh.clear();
  k.vh.clear();
  k.attn.assign(cfg_.heads, {});
  for (std::size_t h = 0; h < cfg_.heads; ++h) {
    k.qh.push_back(numerics::slice_cols(q_all, h * dh, (h + 1) * dh));
    k.kh.push_back(numerics::slice_cols(k_all, h * dh, (h + 1) * dh));
    k.vh.push_back(numerics::slice_cols(v_all, h * dh, (h + 1) * dh));
    const Tensor o = numerics::scaled_dot_attention(k.qh[h], k.kh[h], k.vh[h], false, &k.attn[h]);
    numerics::set_cols(k.attn_concat, o, h * dh);
  }
  k.gates = numerics::sigmoid(gate_logits(q));
  k.gated = k.attn_concat;
  for (std::size_t i = 0; i < k.gated.size(); ++i) k.gated[i] *= k.gates[i];
  Tensor out = numerics::add(q, linear(k.gated, wo, nullptr));
  if (cache) {
    k.q_in = q;
    k.c_in = c;
  }
  return out;
}

FusionBlock::Grads FusionBlock::backward(const Cache& k, const Tensor& dy) {
  const std::size_t dh = cfg_.head_dim();
  const Tensor dgated = linear_backward(k.gated, wo, nullptr, dy);

  Tensor dattn = dgated;
  Tensor dgate_logits = dgated;
  for (std::size_t i = 0; i < dgated.size(); ++i) {
    dattn[i] = dgated[i] * k.gates[i];
    dgate_logits[i] = dgated[i] * k.attn_concat[i] * k.gates[i] * (1.0 - k.gates[i]);
  }
  if (numerics::backward_mutated("fusion_gate")) numerics::scale_into(dgate_logits, -1.0);

  Grads g;
  g.dq = dy;  // residual
  numerics::add_into(g.dq, linear_backward(k.q_in, wg, &bg, dgate_logits));

  Tensor dq_all = Tensor::matrix(k.qn.rows(), cfg_.d_model);
  Tensor dk_all = Tensor::matrix(k.cn.rows(), cfg_.d_model);
  Tensor dv_all = Tensor::matrix(k.cn.rows(), cfg_.d_model);
  for (std::size_t h = 0; h < cfg_.heads; ++h) {
    const Tensor dout = numerics::slice_cols(dattn, h * dh, (h + 1) * dh);
    const auto ag = numerics::scaled_dot_attention_backward(k.qh[h], k.kh[h], k.vh[h], k.attn[h], dout);
    numerics::set_cols(dq_all, ag.dq, h * dh);
    numerics::set_cols(dk_all, ag.dk, h * dh);
    numerics::set_cols(dv_all, ag.dv, h * dh);
  }
  const Tensor dqn = linear_backward(k.qn, wq, nullptr, dq_all);
  Tensor dcn = linear_backward(k.cn, wk, nullptr, dk_all);
  numerics::add_into(dcn, linear_backward(k.cn, wv, nullptr, dv_all));

  if (cfg_.layer_norm) {
    numerics::add_into(g.dq, ln_q.backward(k.ln_q, dqn));
    g.dc = ln_c.backward(k.ln_c, dcn);
  } else {
    numerics::add_into(g.dq, dqn);
    g.dc = dcn;
  }
  return g;
}

void FusionBlock::collect(ParameterList& out, const std::string& prefix) {
  if (cfg_.layer_norm) {
    ln_q.collect(out, prefix + ".ln_q");
    ln_c.collect(out, prefix + ".ln_c");
  }
  out.push_back({prefix + ".wq", &wq});
  out.push_back({prefix + ".wk", &wk});
  out.push_back({prefix + ".wv", &wv});
  out.push_back({prefix + ".wo", &wo});
  out.push_back({prefix + ".wg", &wg});
  out.push_back({prefix + ".bg", &bg});
}

FusionStack::FusionStack(std::size_t depth, const FusionConfig& cfg, Rng& rng, double init_std) {
  blocks.reserve(depth);
  for (std::size_t i = 0; i < depth; ++i) blocks.emplace_back(cfg, rng, init_std);
}

Tensor FusionStack::forward(const Tensor& q, const Tensor& c, Cache* cache) const {
  if (c.rank() != 2 || c.rows() == 0) throw EmptyContextError("fusion: context has no rows");
  if (cache) cache->assign(blocks.size(), {});
  Tensor h = q;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h = blocks[i].forward(h, c, cache ? &(*cache)[i] : nullptr);
  }
  return h;
}

FusionBlock::Grads FusionStack::backward(const Cache& cache, const Tensor& dy) {
  FusionBlock::Grads total;
  total.dq = dy;
  for (std::size_t i = blocks.size(); i-- > 0;) {
    auto g = blocks[i].backward(cache[i], total.dq);
    total.dq = std::move(g.dq);
    if (total.dc.empty()) {
      total.dc = std::move(g.dc);
    } else {
      numerics::add_into(total.dc, g.dc);
    }
  }
  return total;
}

void FusionStack::collect(ParameterList& out, const std::string& prefix) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].collect(out, prefix + "." + std::to_string(i));
  }
}

void FusionStack::zero_value_projections() {
  for (auto& b : blocks) b.zero_value_projection();
}

}  // namespace exomni::fusion
