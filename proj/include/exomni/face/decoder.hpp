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

#include "exomni/face/blendshape.hpp"
#include "exomni/fusion/fusion.hpp"
#include "exomni/nn/layers.hpp"
#include "exomni/positional/rope.hpp"
#include "exomni/units/generator.hpp"

namespace exomni::face {

using numerics::ParameterList;
using numerics::Rng;
using numerics::Tensor;

// Endpoint-aligned linear interpolation: output row j samples the source at
// j (T_u - 1) / (T_y - 1). T_y == 1 yields row 0; T_u == 1 repeats row 0.
Tensor resample(const Tensor& e, std::size_t t_y);
// Scatters each output row's gradient back with its interpolation weights.
Tensor resample_backward(const Tensor& dy, std::size_t t_u);

// max(1, round(T_u * fps / unit_rate))
std::size_t frame_count(std::size_t t_u, double unit_rate, double fps);

struct FaceDecoderConfig {
  std::size_t unit_vocab = 64;
  std::size_t d_gen = 64;
  std::size_t d_model = 64;  // d_f
  std::size_t heads = 4;
  std::size_t fusion_depth = 2;
  std::size_t encoder_layers = 6;
  bool fusion_layer_norm = true;
  positional::PeriodicRopeConfig rope;
  double fps = kDefaultFps;
  double unit_rate = units::kDefaultUnitRate;
};

// Non-autoregressive facial decoder. All T_y frames come out of one pass:
//   Q_y = resample(Emb(u), T_y)
//   S   = gen_hidden W_s + b_s
//   H_f = Fuse(Q_y, S)
//   y   = sigmoid(Head(LN(Encoder(PeriodicRoPE(H_f)))))
class FaceDecoder {
 public:
  struct Cache {
    std::vector<std::size_t> units;
    Tensor gen_hidden;
    Tensor context;
    fusion::FusionStack::Cache fusion;
    std::vector<double> positions;
    nn::TransformerStack::Cache encoder;
    numerics::LayerNormCache ln_f;
    Tensor normed;
    Tensor coeffs;
  };

  FaceDecoder() = default;
  FaceDecoder(const FaceDecoderConfig& cfg, Rng& rng, double init_std);

  // Steps up to and including the fusion; T_y x d_f.
  Tensor face_hidden(const units::UnitSequence& u, const Tensor& gen_hidden,
                     Cache* cache = nullptr) const;
  BlendshapeClip decode(const units::UnitSequence& u, const Tensor& gen_hidden,
                        Cache* cache = nullptr) const;
  // Returns the gradient for gen_hidden.
  Tensor backward(const Cache& cache, const Tensor& d_coeffs);

  std::size_t frames_for(std::size_t t_u) const;
  void collect(ParameterList& out, const std::string& prefix);
  const FaceDecoderConfig& config() const { return cfg_; }

  nn::Embedding unit_embed;
  nn::Linear context_proj;
  fusion::FusionStack fusion;
  nn::TransformerStack encoder;
  nn::LayerNorm ln_f;
  nn::Linear head;

 private:
  void check_inputs(const units::UnitSequence& u, const Tensor& gen_hidden) const;

  FaceDecoderConfig cfg_;
};

inline BlendshapeClip decode_face(const units::UnitSequence& u, const Tensor& gen_hidden,
                                  const FaceDecoder& params) {
  return params.decode(u, gen_hidden);
}

}  // namespace exomni::face
