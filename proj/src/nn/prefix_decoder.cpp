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

#include "exomni/nn/prefix_decoder.hpp"

#include "exomni/errors.hpp"

namespace exomni::nn {

std::size_t PrefixDecoder::Pass::first_pred_row() const {
  // Without a start token the last prefix row predicts the first token.
  const bool has_start = stream.size() == targets.size();
  return has_start ? prefix_len : prefix_len - 1;
}

std::size_t PrefixDecoder::Pass::first_token_row() const {
  const bool has_start = stream.size() == targets.size();
  return prefix_len + (has_start ? 1 : 0);
}

Tensor PrefixDecoder::Pass::token_hidden() const {
  const std::size_t t = targets.size() - 1;
  return numerics::slice_rows(hidden, first_token_row(), first_token_row() + t);
}

PrefixDecoder::PrefixDecoder(const PrefixDecoderConfig& cfg, Rng& rng, double init_std)
    : embed(cfg.input_vocab, cfg.d_model, rng, init_std),
      stack(cfg.layers,
            AttentionSpec{cfg.d_model, cfg.heads, /*causal=*/true, /*rope=*/true, cfg.rope_base},
            rng, init_std),
      ln_f(cfg.d_model),
      head(cfg.d_model, cfg.output_vocab, rng, init_std),
      cfg_(cfg) {
  if (cfg.end_token >= cfg.output_vocab) throw ConfigError("prefix decoder: end token outside output vocabulary");
  if (cfg.start_token && *cfg.start_token >= cfg.input_vocab) {
    throw ConfigError("prefix decoder: start token outside input vocabulary");
  }
}

std::vector<double> PrefixDecoder::positions_for(std::size_t prefix_len,
                                                 std::size_t stream_len) const {
  std::vector<double> pos(prefix_len + stream_len);
  for (std::size_t i = 0; i < prefix_len; ++i) pos[i] = static_cast<double>(i);
  const std::size_t base = cfg_.aligned_positions ? 0 : prefix_len;
  for (std::size_t j = 0; j < stream_len; ++j) {
    pos[prefix_len + j] = static_cast<double>(base + j);
  }
  return pos;
}

Tensor PrefixDecoder::forward_hidden(const Tensor& input, std::span<const double> positions,
                                     TransformerStack::Cache* stack_cache,
                                     numerics::LayerNormCache* ln_cache) const {
  return ln_f.forward(stack.forward(input, positions, stack_cache), ln_cache);
}

PrefixDecoder::Pass PrefixDecoder::teacher_force(const Tensor& prefix,
                                                 std::span<const std::size_t> tokens) const {
  if (prefix.rank() != 2 || prefix.cols() != cfg_.d_model) {
    throw ShapeError("prefix decoder: prefix " + prefix.shape_string() + " for width " +
                     std::to_string(cfg_.d_model));
  }
  if (!cfg_.start_token && prefix.rows() == 0) {
    throw ShapeError("prefix decoder: empty prefix and no start token");
  }
  Pass p;
  p.prefix_len = prefix.rows();
  if (cfg_.start_token) p.stream.push_back(*cfg_.start_token);
  p.stream.insert(p.stream.end(), tokens.begin(), tokens.end());
  p.targets.assign(tokens.begin(), tokens.end());
  p.targets.push_back(cfg_.end_token);
  for (std::size_t t : p.targets) {
    if (t >= cfg_.output_vocab) {
      throw IndexError("prefix decoder: target " + std::to_string(t) + " outside vocabulary of " +
                       std::to_string(cfg_.output_vocab));
    }
  }
  p.positions = positions_for(p.prefix_len, p.stream.size());
  p.input = numerics::concat_rows(prefix, embed.forward(p.stream));
  p.hidden = forward_hidden(p.input, p.positions, &p.stack, &p.ln_f);
  p.pred_rows = numerics::slice_rows(p.hidden, p.first_pred_row(),
                                     p.first_pred_row() + p.targets.size());
  p.logits = head.forward(p.pred_rows);
  return p;
}

double PrefixDecoder::loss(const Pass& pass) const {
  return numerics::cross_entropy(pass.logits, pass.targets);
}

Tensor PrefixDecoder::backward(const Pass& p, double ce_scale, const Tensor* d_token_hidden) {
  Tensor dhidden = Tensor::matrix(p.hidden.rows(), p.hidden.cols());
  if (ce_scale != 0.0) {
    const Tensor dlogits = numerics::cross_entropy_backward(p.logits, p.targets, {}, ce_scale);
    const Tensor dpred = head.backward(p.pred_rows, dlogits);
    for (std::size_t i = 0; i < dpred.rows(); ++i) {
      auto dst = dhidden.row(p.first_pred_row() + i);
      const auto src = dpred.row(i);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  }
  if (d_token_hidden != nullptr && !d_token_hidden->empty()) {
    for (std::size_t i = 0; i < d_token_hidden->rows(); ++i) {
      auto dst = dhidden.row(p.first_token_row() + i);
      const auto src = d_token_hidden->row(i);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  }
  const Tensor dstack_out = ln_f.backward(p.ln_f, dhidden);
  const Tensor dinput = stack.backward(p.stack, p.positions, dstack_out);
  embed.backward(p.stream, numerics::slice_rows(dinput, p.prefix_len, dinput.rows()));
  return numerics::slice_rows(dinput, 0, p.prefix_len);
}

PrefixDecoder::Decoded PrefixDecoder::decode(const Tensor& prefix, std::size_t max_tokens,
                                             const DecodeOptions& opts) const {
  if (max_tokens < 1) throw ArgumentError("decode: max_tokens must be >= 1");
  if (prefix.rank() != 2 || prefix.cols() != cfg_.d_model) {
    throw ShapeError("decode: prefix " + prefix.shape_string() + " for width " +
                     std::to_string(cfg_.d_model));
  }
  if (!cfg_.start_token && prefix.rows() == 0) {
    throw ShapeError("decode: empty prefix and no start token");
  }
  Rng rng(opts.seed);
  std::vector<std::size_t> stream;
  if (cfg_.start_token) stream.push_back(*cfg_.start_token);
  Decoded out;
  while (out.tokens.size() < max_tokens) {
    const auto pos = positions_for(prefix.rows(), stream.size());
    const Tensor input = numerics::concat_rows(prefix, embed.forward(stream));
    const Tensor hidden = forward_hidden(input, pos, nullptr, nullptr);
    const Tensor last = numerics::slice_rows(hidden, hidden.rows() - 1, hidden.rows());
    Tensor probs = numerics::softmax(head.forward(last));
    if (opts.observer) opts.observer(probs);
    if (out.tokens.size() < opts.min_tokens) {
      probs[cfg_.end_token] = 0.0;
    }
    std::size_t choice = 0;
    if (opts.mode == DecodeOptions::Mode::kGreedy) {
      for (std::size_t j = 1; j < probs.size(); ++j) {
        if (probs[j] > probs[choice]) choice = j;
      }
    } else {
      double total = 0.0;
      for (double v : probs.data()) total += v;
      double u = rng.uniform() * total;
      choice = probs.size() - 1;
      for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0) continue;
        if (u < probs[j]) {
          choice = j;
          break;
        }
        u -= probs[j];
      }
      while (probs[choice] <= 0.0 && choice > 0) --choice;
    }
    if (choice == cfg_.end_token) break;
    if (choice >= cfg_.input_vocab) throw IndexError("decode: sampled token outside input vocabulary");
    out.tokens.push_back(choice);
    stream.push_back(choice);
  }
  if (out.tokens.empty()) {
    out.hidden = Tensor::matrix(0, cfg_.d_model);
    return out;
  }
  const Pass final_pass = teacher_force(prefix, out.tokens);
  out.hidden = final_pass.token_hidden();
  return out;
}

void PrefixDecoder::collect(ParameterList& out, const std::string& prefix) {
  embed.collect(out, prefix + ".embed");
  stack.collect(out, prefix + ".blocks");
  ln_f.collect(out, prefix + ".ln_f");
  head.collect(out, prefix + ".head");
}

}  // namespace exomni::nn
