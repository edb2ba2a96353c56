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

#include "exomni/semantic/semantic.hpp"

#include "exomni/errors.hpp"

namespace exomni::semantic {

Tensor group_frames(const Tensor& frames, std::size_t group) {
  if (frames.rank() != 2 || frames.rows() == 0) {
    throw ShapeError("group_frames: need at least one frame, got " + frames.shape_string());
  }
  const std::size_t t = frames.rows(), d = frames.cols();
  const std::size_t groups = (t + group - 1) / group;
  Tensor out = Tensor::matrix(groups, group * d);
  for (std::size_t f = 0; f < t; ++f) {
    const auto src = frames.row(f);
    auto dst = out.row(f / group);
    const std::size_t off = (f % group) * d;
    for (std::size_t j = 0; j < d; ++j) dst[off + j] = src[j];
  }
  return out;
}

SpeechProjector::SpeechProjector(std::size_t d_enc, std::size_t d_model, Rng& rng,
                                 double init_std)
    : fc1(kProjectorGroup * d_enc, d_model, rng, init_std),
      fc2(d_model, d_model, rng, init_std) {}

Tensor SpeechProjector::forward(const SpeechFeatures& f, Cache* cache) const {
  if (f.frames.rank() != 2 || f.frames.cols() != d_enc()) {
    throw ShapeError("speech projector: frames " + f.frames.shape_string() + " for d_enc " +
                     std::to_string(d_enc()));
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  c.grouped = group_frames(f.frames);
  c.pre_act = fc1.forward(c.grouped);
  c.act = numerics::relu(c.pre_act);
  return fc2.forward(c.act);
}

void SpeechProjector::backward(const Cache& c, const Tensor& dy) {
  const Tensor dact = fc2.backward(c.act, dy);
  fc1.backward(c.grouped, numerics::relu_backward(c.pre_act, dact));
}

void SpeechProjector::collect(ParameterList& out, const std::string& prefix) {
  fc1.collect(out, prefix + ".fc1");
  fc2.collect(out, prefix + ".fc2");
}

Reasoner::Reasoner(const ReasonerConfig& cfg, Rng& rng, double init_std) : cfg_(cfg) {
  nn::PrefixDecoderConfig dc;
  dc.input_vocab = cfg.vocab;
  dc.output_vocab = cfg.vocab;
  dc.d_model = cfg.d_model;
  dc.layers = cfg.layers;
  dc.heads = cfg.heads;
  dc.rope_base = cfg.rope_base;
  dc.end_token = kEosToken;
  decoder = nn::PrefixDecoder(dc, rng, init_std);
}

Tensor Reasoner::embed_tokens(std::span<const std::size_t> ids) const {
  return decoder.embed.forward(ids);
}

void Reasoner::embed_backward(std::span<const std::size_t> ids, const Tensor& dy) {
  decoder.embed.backward(ids, dy);
}

void Reasoner::collect(ParameterList& out, const std::string& prefix) {
  decoder.collect(out, prefix);
}

Tensor project_speech(const SpeechFeatures& f, const SpeechProjector& projector) {
  return projector.forward(f);
}

Tensor build_unified_input(const TokenSequence& x, const std::optional<Tensor>& speech,
                           const Reasoner& reasoner) {
  if (x.ids.empty()) throw ArgumentError("build_unified_input: empty text prompt");
  Tensor text = reasoner.embed_tokens(x.ids);
  if (!speech || speech->rows() == 0) return text;
  return numerics::concat_rows(text, *speech);
}

ReasonerOutput reason(const Tensor& x, const Reasoner& reasoner, std::size_t max_tokens,
                      const DecodeOptions& decode) {
  auto decoded = reasoner.decoder.decode(x, max_tokens, decode);
  ReasonerOutput out;
  out.tokens.ids = std::move(decoded.tokens);
  out.tokens.role = TokenRole::kResponse;
  out.hidden = std::move(decoded.hidden);
  return out;
}

}  // namespace exomni::semantic
