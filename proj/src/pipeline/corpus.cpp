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

#include "exomni/pipeline/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "exomni/errors.hpp"
#include "exomni/face/decoder.hpp"

namespace exomni::pipeline {

namespace {

constexpr std::uint64_t kTeacherStream = 0x7e4c;
constexpr double kFaceBiasStd = 1.5;
constexpr double kFaceCenterStd = 1.2;
constexpr double kFaceNeighbourStd = 0.2;
constexpr double kFeatureNoise = 0.3;
constexpr double kFeatureCarry = 0.5;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tokens random_text(numerics::Rng& rng, const CorpusSizes& sizes, std::size_t vocab) {
  const std::size_t span = sizes.max_len - sizes.min_len + 1;
  const std::size_t len = sizes.min_len + rng.below(span);
  Tokens t(len);
  for (auto& id : t) id = semantic::kFirstContentToken + rng.below(vocab - semantic::kFirstContentToken);
  return t;
}

}  // namespace

std::string kind_name(DataKind k) {
  switch (k) {
    case DataKind::kAsr: return "asr";
    case DataKind::kTts: return "tts";
    case DataKind::kFace: return "face";
    case DataKind::kS2s: return "s2s";
    case DataKind::kT2t: return "t2t";
  }
  return "?";
}

DataKind parse_kind(const std::string& text) {
  for (std::size_t i = 0; i < kKindCount; ++i) {
    if (kind_name(static_cast<DataKind>(i)) == text) return static_cast<DataKind>(i);
  }
  throw ArgumentError("unknown data kind '" + text + "'");
}

std::size_t CorpusSizes::count(DataKind k) const {
  switch (k) {
    case DataKind::kAsr: return asr;
    case DataKind::kTts: return tts;
    case DataKind::kFace: return face;
    case DataKind::kS2s: return s2s;
    case DataKind::kT2t: return t2t;
  }
  return 0;
}

void CorpusSizes::validate() const {
  for (std::size_t i = 0; i < kKindCount; ++i) {
    if (count(static_cast<DataKind>(i)) < 1) {
      throw ArgumentError("corpus size for " + kind_name(static_cast<DataKind>(i)) + " must be >= 1");
    }
  }
  if (min_len < 1 || max_len < min_len) throw ArgumentError("corpus lengths need 1 <= min_len <= max_len");
}

std::size_t SyntheticCorpus::count(DataKind k) const {
  switch (k) {
    case DataKind::kAsr: return asr.size();
    case DataKind::kTts: return tts.size();
    case DataKind::kFace: return face.size();
    case DataKind::kS2s: return s2s.size();
    case DataKind::kT2t: return t2t.size();
  }
  return 0;
}

CorpusTeacher::CorpusTeacher(std::uint64_t seed, const CorpusShape& shape) : shape_(shape) {
  if (shape.text_vocab <= semantic::kFirstContentToken || shape.unit_vocab < 1 || shape.d_enc < 1) {
    throw ArgumentError("corpus shape: vocabularies and feature width must be positive");
  }
  numerics::Rng rng(numerics::derive_seed(seed, kTeacherStream));
  const std::size_t v = shape.text_vocab, u = shape.unit_vocab, k = face::kBlendshapeCount;

  unit_of_token_.resize(v);
  for (auto& x : unit_of_token_) x = rng.below(u);

  std::vector<std::size_t> content;
  for (std::size_t t = semantic::kFirstContentToken; t < v; ++t) content.push_back(t);
  for (std::size_t i = content.size(); i > 1; --i) std::swap(content[i - 1], content[rng.below(i)]);
  response_of_token_.assign(v, 0);
  for (std::size_t i = 0; i < content.size(); ++i) {
    response_of_token_[semantic::kFirstContentToken + i] = content[i];
  }

  token_means_ = Tensor::matrix(v, shape.d_enc);
  for (double& x : token_means_.data()) x = rng.normal();

  face_bias_.resize(k);
  for (double& x : face_bias_) x = kFaceBiasStd * rng.normal();
  for (Tensor* w : {&face_prev_, &face_cur_, &face_next_}) {
    const double sd = w == &face_cur_ ? kFaceCenterStd : kFaceNeighbourStd;
    *w = Tensor::matrix(u, k);
    for (double& x : w->data()) x = sd * rng.normal();
  }
}

units::UnitSequence CorpusTeacher::units_for(const Tokens& text) const {
  units::UnitSequence seq;
  seq.unit_rate = shape_.unit_rate;
  seq.units.reserve(text.size());
  for (std::size_t id : text) {
    if (id >= unit_of_token_.size()) throw IndexError("token " + std::to_string(id) + " outside vocabulary");
    seq.units.push_back(unit_of_token_[id]);
  }
  return seq;
}

face::BlendshapeClip CorpusTeacher::face_for(const units::UnitSequence& seq) const {
  const std::size_t t_u = seq.units.size(), k = face::kBlendshapeCount;
  if (t_u == 0) throw ArgumentError("face teacher: empty unit sequence");
  Tensor logits = Tensor::matrix(t_u, k);
  for (std::size_t t = 0; t < t_u; ++t) {
    auto row = logits.row(t);
    const auto cur = face_cur_.row(seq.units[t]);
    for (std::size_t c = 0; c < k; ++c) row[c] = face_bias_[c] + cur[c];
    if (t > 0) {
      const auto prev = face_prev_.row(seq.units[t - 1]);
      for (std::size_t c = 0; c < k; ++c) row[c] += prev[c];
    }
    if (t + 1 < t_u) {
      const auto next = face_next_.row(seq.units[t + 1]);
      for (std::size_t c = 0; c < k; ++c) row[c] += next[c];
    }
  }
  const std::size_t t_y = face::frame_count(t_u, shape_.unit_rate, shape_.fps);
  Tensor squashed = face::resample(logits, t_y);
  for (double& x : squashed.data()) x = sigmoid(x);

  Tensor smooth = Tensor::matrix(t_y, k);
  for (std::size_t t = 0; t < t_y; ++t) {
    const std::size_t lo = t == 0 ? 0 : t - 1;
    const std::size_t hi = std::min(t + 1, t_y - 1);
    const double n = static_cast<double>(hi - lo + 1);
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) s += squashed(j, c);
      smooth(t, c) = s / n;
    }
  }
  return face::BlendshapeClip{std::move(smooth), shape_.fps};
}

semantic::SpeechFeatures CorpusTeacher::features_for(const Tokens& text, numerics::Rng& rng) const {
  std::vector<std::size_t> owner;
  for (std::size_t id : text) {
    if (id >= token_means_.rows()) throw IndexError("token " + std::to_string(id) + " outside vocabulary");
    const std::size_t frames = 4 + rng.below(3);
    owner.insert(owner.end(), frames, id);
  }
  Tensor f = Tensor::matrix(owner.size(), shape_.d_enc);
  std::vector<double> noise(shape_.d_enc, 0.0);
  for (std::size_t t = 0; t < owner.size(); ++t) {
    const auto mean = token_means_.row(owner[t]);
    auto row = f.row(t);
    for (std::size_t c = 0; c < shape_.d_enc; ++c) {
      noise[c] = kFeatureCarry * noise[c] + kFeatureNoise * rng.normal();
      row[c] = mean[c] + noise[c];
    }
  }
  return semantic::SpeechFeatures{std::move(f)};
}

Tokens CorpusTeacher::respond(const Tokens& prompt) const {
  Tokens out;
  out.reserve(prompt.size());
  for (std::size_t id : prompt) {
    if (id < semantic::kFirstContentToken || id >= response_of_token_.size()) {
      throw IndexError("chat teacher: token " + std::to_string(id) + " is not a content token");
    }
    out.push_back(response_of_token_[id]);
  }
  return out;
}

SyntheticCorpus generate_corpus(std::uint64_t seed, const CorpusSizes& sizes, const CorpusShape& shape) {
  sizes.validate();
  const CorpusTeacher teacher(seed, shape);
  SyntheticCorpus c;
  c.seed = seed;
  c.shape = shape;
  auto sample_rng = [seed](DataKind k, std::size_t i) {
    return numerics::Rng(numerics::derive_seed(seed, 1 + static_cast<std::uint64_t>(k), i));
  };
  for (std::size_t i = 0; i < sizes.asr; ++i) {
    auto rng = sample_rng(DataKind::kAsr, i);
    AsrSample s;
    s.text = random_text(rng, sizes, shape.text_vocab);
    s.features = teacher.features_for(s.text, rng);
    c.asr.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < sizes.tts; ++i) {
    auto rng = sample_rng(DataKind::kTts, i);
    TtsSample s;
    s.text = random_text(rng, sizes, shape.text_vocab);
    s.units = teacher.units_for(s.text);
    c.tts.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < sizes.face; ++i) {
    auto rng = sample_rng(DataKind::kFace, i);
    FaceSample s;
    s.text = random_text(rng, sizes, shape.text_vocab);
    s.units = teacher.units_for(s.text);
    s.clip = teacher.face_for(s.units);
    c.face.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < sizes.s2s; ++i) {
    auto rng = sample_rng(DataKind::kS2s, i);
    S2sSample s;
    s.question_text = random_text(rng, sizes, shape.text_vocab);
    s.question = teacher.features_for(s.question_text, rng);
    s.response = teacher.respond(s.question_text);
    s.units = teacher.units_for(s.response);
    s.clip = teacher.face_for(s.units);
    c.s2s.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < sizes.t2t; ++i) {
    auto rng = sample_rng(DataKind::kT2t, i);
    T2tSample s;
    s.prompt = random_text(rng, sizes, shape.text_vocab);
    s.response = teacher.respond(s.prompt);
    c.t2t.push_back(std::move(s));
  }
  return c;
}

}  // namespace exomni::pipeline
