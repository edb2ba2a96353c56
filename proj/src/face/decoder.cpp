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

#include "exomni/face/decoder.hpp"

#include <cmath>

#include "exomni/errors.hpp"

namespace exomni::face {

const std::array<std::string_view, kBlendshapeCount> kArkitNames = {
    "eyeBlinkLeft",     "eyeLookDownLeft",  "eyeLookInLeft",     "eyeLookOutLeft",
    "eyeLookUpLeft",    "eyeSquintLeft",    "eyeWideLeft",       "eyeBlinkRight",
    "eyeLookDownRight", "eyeLookInRight",   "eyeLookOutRight",   "eyeLookUpRight",
    "eyeSquintRight",   "eyeWideRight",     "jawForward",        "jawLeft",
    "jawRight",         "jawOpen",          "mouthClose",        "mouthFunnel",
    "mouthPucker",      "mouthLeft",        "mouthRight",        "mouthSmileLeft",
    "mouthSmileRight",  "mouthFrownLeft",   "mouthFrownRight",   "mouthDimpleLeft",
    "mouthDimpleRight", "mouthStretchLeft", "mouthStretchRight", "mouthRollLower",
    "mouthRollUpper",   "mouthShrugLower",  "mouthShrugUpper",   "mouthPressLeft",
    "mouthPressRight",  "mouthLowerDownLeft", "mouthLowerDownRight", "mouthUpperUpLeft",
    "mouthUpperUpRight", "browDownLeft",    "browDownRight",     "browInnerUp",
    "browOuterUpLeft",  "browOuterUpRight", "cheekPuff",         "cheekSquintLeft",
    "cheekSquintRight", "noseSneerLeft",    "noseSneerRight",    "tongueOut",
};

void BlendshapeClip::validate() const {
  if (coeffs.rank() != 2 || coeffs.rows() < 1 || coeffs.cols() != kBlendshapeCount) {
    throw ArgumentError("blendshape clip must be T x 52 with T >= 1, got " + coeffs.shape_string());
  }
  if (!(fps > 0.0)) throw ArgumentError("blendshape clip fps must be positive");
  for (double v : coeffs.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("blendshape coefficient outside [0, 1]");
  }
}

// ---- resampling -----------------------------------------------------------

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

Tap tap_for(std::size_t j, std::size_t t_u, std::size_t t_y) {
  if (t_y == 1 || t_u == 1) return {0, 0, 0.0};
  const double s = static_cast<double>(j * (t_u - 1)) / static_cast<double>(t_y - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(s));
  if (lo > t_u - 1) lo = t_u - 1;
  const std::size_t hi = lo + 1 < t_u ? lo + 1 : lo;
  return {lo, hi, s - static_cast<double>(lo)};
}

}  // namespace

Tensor resample(const Tensor& e, std::size_t t_y) {
  if (t_y < 1) throw ArgumentError("resample: target length must be >= 1");
  if (e.rank() != 2 || e.rows() < 1) throw ArgumentError("resample: source must have >= 1 row");
  const std::size_t t_u = e.rows(), d = e.cols();
  Tensor out = Tensor::matrix(t_y, d);
  for (std::size_t j = 0; j < t_y; ++j) {
    const Tap tap = tap_for(j, t_u, t_y);
    const auto a = e.row(tap.lo);
    const auto b = e.row(tap.hi);
    auto o = out.row(j);
    if (tap.frac == 0.0) {
      for (std::size_t c = 0; c < d; ++c) o[c] = a[c];
    } else {
      for (std::size_t c = 0; c < d; ++c) o[c] = (1.0 - tap.frac) * a[c] + tap.frac * b[c];
    }
  }
  return out;
}

Tensor resample_backward(const Tensor& dy, std::size_t t_u) {
  const std::size_t t_y = dy.rows(), d = dy.cols();
  Tensor dx = Tensor::matrix(t_u, d);
  for (std::size_t j = 0; j < t_y; ++j) {
    const Tap tap = tap_for(j, t_u, t_y);
    const auto g = dy.row(j);
    auto a = dx.row(tap.lo);
    if (tap.frac == 0.0) {
      for (std::size_t c = 0; c < d; ++c) a[c] += g[c];
    } else {
      auto b = dx.row(tap.hi);
      for (std::size_t c = 0; c < d; ++c) {
        a[c] += (1.0 - tap.frac) * g[c];
        b[c] += tap.frac * g[c];
      }
    }
  }
  if (numerics::backward_mutated("resample")) numerics::scale_into(dx, -1.0);
  return dx;
}

std::size_t frame_count(std::size_t t_u, double unit_rate, double fps) {
  if (t_u < 1) throw ArgumentError("frame_count: need at least one unit");
  if (!(unit_rate > 0.0) || !(fps > 0.0)) {
    throw ArgumentError("frame_count: unit rate and fps must be positive");
  }
  const double frames = std::round(static_cast<double>(t_u) * fps / unit_rate);
  return frames < 1.0 ? 1 : static_cast<std::size_t>(frames);
}

// ---- decoder --------------------------------------------------------------

FaceDecoder::FaceDecoder(const FaceDecoderConfig& cfg, Rng& rng, double init_std) : cfg_(cfg) {
  cfg_.rope.validate();
  unit_embed = nn::Embedding(cfg.unit_vocab, cfg.d_model, rng, init_std);
  context_proj = nn::Linear(cfg.d_gen, cfg.d_model, rng, init_std);
  fusion::FusionConfig fc;
  fc.d_model = cfg.d_model;
  fc.heads = cfg.heads;
  fc.layer_norm = cfg.fusion_layer_norm;
  fusion = fusion::FusionStack(cfg.fusion_depth, fc, rng, init_std);
  nn::AttentionSpec spec{cfg.d_model, cfg.heads, /*causal=*/false, /*rope=*/false,
                         cfg.rope.base};
  encoder = nn::TransformerStack(cfg.encoder_layers, spec, rng, init_std);
  ln_f = nn::LayerNorm(cfg.d_model);
  head = nn::Linear(cfg.d_model, kBlendshapeCount, rng, init_std);
  if (cfg.d_model % 2 != 0) throw ConfigError("face decoder: d_model must be even for rope");
}

std::size_t FaceDecoder::frames_for(std::size_t t_u) const {
  return frame_count(t_u, cfg_.unit_rate, cfg_.fps);
}

void FaceDecoder::check_inputs(const units::UnitSequence& u, const Tensor& gen_hidden) const {
  if (u.units.empty()) throw ArgumentError("face decoder: empty unit sequence");
  if (gen_hidden.rank() != 2 || gen_hidden.rows() != u.units.size()) {
    throw AlignmentError("face decoder: " + std::to_string(u.units.size()) +
                         " units but generator hidden is " + gen_hidden.shape_string());
  }
  if (gen_hidden.cols() != cfg_.d_gen) {
    throw ShapeError("face decoder: generator hidden width " + std::to_string(gen_hidden.cols()) +
                     ", expected " + std::to_string(cfg_.d_gen));
  }
}

Tensor FaceDecoder::face_hidden(const units::UnitSequence& u, const Tensor& gen_hidden,
                                Cache* cache) const {
  check_inputs(u, gen_hidden);
  const std::size_t t_y = frames_for(u.units.size());
  const Tensor q_y = resample(unit_embed.forward(u.units), t_y);
  Tensor context = context_proj.forward(gen_hidden);
  Tensor h_f = fusion.forward(q_y, context, cache ? &cache->fusion : nullptr);
  if (cache) {
    cache->units = u.units;
    cache->gen_hidden = gen_hidden;
    cache->context = std::move(context);
  }
  return h_f;
}

BlendshapeClip FaceDecoder::decode(const units::UnitSequence& u, const Tensor& gen_hidden,
                                   Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  const Tensor h_f = face_hidden(u, gen_hidden, &c);
  c.positions = positional::periodic_positions(h_f.rows(), cfg_.rope);
  const Tensor rotated = positional::apply_rope(h_f, c.positions, cfg_.rope.base);
  const Tensor enc = encoder.forward(rotated, c.positions, &c.encoder);
  c.normed = ln_f.forward(enc, &c.ln_f);
  c.coeffs = numerics::sigmoid(head.forward(c.normed));
  return BlendshapeClip{c.coeffs, cfg_.fps};
}

Tensor FaceDecoder::backward(const Cache& c, const Tensor& d_coeffs) {
  const Tensor dlogits = numerics::sigmoid_backward(c.coeffs, d_coeffs);
  const Tensor dnormed = head.backward(c.normed, dlogits);
  const Tensor denc = ln_f.backward(c.ln_f, dnormed);
  const Tensor drot = encoder.backward(c.encoder, c.positions, denc);
  const Tensor dh_f = positional::apply_rope_backward(drot, c.positions, cfg_.rope.base);
  const auto g = fusion.backward(c.fusion, dh_f);
  unit_embed.backward(c.units, resample_backward(g.dq, c.units.size()));
  if (g.dc.empty()) return Tensor::matrix(c.gen_hidden.rows(), c.gen_hidden.cols());
  return context_proj.backward(c.gen_hidden, g.dc);
}

void FaceDecoder::collect(ParameterList& out, const std::string& prefix) {
  unit_embed.collect(out, prefix + ".unit_embed");
  context_proj.collect(out, prefix + ".context_proj");
  fusion.collect(out, prefix + ".fusion");
  encoder.collect(out, prefix + ".encoder");
  ln_f.collect(out, prefix + ".ln_f");
  head.collect(out, prefix + ".head");
}

}  // namespace exomni::face
