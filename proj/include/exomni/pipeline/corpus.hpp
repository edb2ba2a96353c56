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
#include <string>
#include <vector>

#include "exomni/face/blendshape.hpp"
#include "exomni/numerics/rng.hpp"
#include "exomni/semantic/semantic.hpp"
#include "exomni/units/generator.hpp"

namespace exomni::pipeline {

using numerics::Tensor;
using Tokens = std::vector<std::size_t>;

enum class DataKind { kAsr, kTts, kFace, kS2s, kT2t };
inline constexpr std::size_t kKindCount = 5;
std::string kind_name(DataKind k);
DataKind parse_kind(const std::string& text);

struct CorpusSizes {
  std::size_t asr = 256;
  std::size_t tts = 256;
  std::size_t face = 128;
  std::size_t s2s = 128;
  std::size_t t2t = 64;
  std::size_t min_len = 8;
  std::size_t max_len = 24;

  std::size_t count(DataKind k) const;
  void validate() const;
};

struct CorpusShape {
  std::size_t text_vocab = 128;
  std::size_t unit_vocab = 64;
  std::size_t d_enc = 16;
  double unit_rate = units::kDefaultUnitRate;
  double fps = face::kDefaultFps;
};

struct AsrSample {
  semantic::SpeechFeatures features;
  Tokens text;
};

struct TtsSample {
  Tokens text;
  units::UnitSequence units;
};

struct FaceSample {
  Tokens text;
  units::UnitSequence units;
  face::BlendshapeClip clip;
};

struct S2sSample {
  semantic::SpeechFeatures question;
  Tokens question_text;
  Tokens response;
  units::UnitSequence units;
  face::BlendshapeClip clip;
};

struct T2tSample {
  Tokens prompt;
  Tokens response;
};

struct SyntheticCorpus {
  std::uint64_t seed = 0;
  CorpusShape shape;
  std::vector<AsrSample> asr;
  std::vector<TtsSample> tts;
  std::vector<FaceSample> face;
  std::vector<S2sSample> s2s;
  std::vector<T2tSample> t2t;

  std::size_t count(DataKind k) const;
};

// Fixed seeded teachers that give the corpus learnable structure.
class CorpusTeacher {
 public:
  CorpusTeacher(std::uint64_t seed, const CorpusShape& shape);

  // One unit per content token through a fixed lookup table.
  units::UnitSequence units_for(const Tokens& text) const;
  // Affine map of the one-hot unit window [t-1, t, t+1], resampled to the
  // frame rate, squashed by a sigmoid and smoothed by a 3-frame moving average.
  face::BlendshapeClip face_for(const units::UnitSequence& u) const;
  // 4-6 frames per token around a per-token mean, plus AR(1) noise.
  semantic::SpeechFeatures features_for(const Tokens& text, numerics::Rng& rng) const;
  // Chat teacher: a fixed permutation of the content tokens, in order.
  Tokens respond(const Tokens& prompt) const;

  const CorpusShape& shape() const { return shape_; }

 private:
  CorpusShape shape_;
  std::vector<std::size_t> unit_of_token_;
  std::vector<std::size_t> response_of_token_;
  Tensor token_means_;
  Tensor face_prev_, face_cur_, face_next_;
  std::vector<double> face_bias_;
};

SyntheticCorpus generate_corpus(std::uint64_t seed, const CorpusSizes& sizes = {},
                                const CorpusShape& shape = {});

}  // namespace exomni::pipeline
