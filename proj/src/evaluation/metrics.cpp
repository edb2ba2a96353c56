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

#include "exomni/evaluation/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "exomni/errors.hpp"
#include "exomni/numerics/rng.hpp"

namespace exomni::evaluation {

void Rig::validate() const {
  if (base.rank() != 2 || base.cols() != 3 || base.rows() == 0) {
    throw ArgumentError("rig: base must be N_v x 3, got " + base.shape_string());
  }
  if (deltas.size() != face::kBlendshapeCount) {
    throw ArgumentError("rig: expected 52 deltas, got " + std::to_string(deltas.size()));
  }
  for (const auto& d : deltas) {
    if (!d.same_shape(base)) throw ArgumentError("rig: delta shape " + d.shape_string());
  }
  if (lip_indices.empty()) throw ArgumentError("rig: no lip vertices");
  for (std::size_t i : lip_indices) {
    if (i >= base.rows()) throw ArgumentError("rig: lip index " + std::to_string(i) + " out of range");
  }
}

Rig make_default_rig(std::uint64_t seed, std::size_t vertices, std::size_t lips) {
  numerics::Rng rng(seed);
  Rig rig;
  rig.base = Tensor::matrix(vertices, 3);
  for (double& v : rig.base.data()) v = rng.normal();
  const double scale = 1.0 / std::sqrt(3.0);
  for (std::size_t k = 0; k < face::kBlendshapeCount; ++k) {
    Tensor d = Tensor::matrix(vertices, 3);
    for (double& v : d.data()) v = scale * rng.normal();
    rig.deltas.push_back(std::move(d));
  }
  for (std::size_t i = 0; i < lips && i < vertices; ++i) rig.lip_indices.push_back(i);
  return rig;
}

Tensor expand_vertices(const Rig& rig, std::span<const double> frame) {
  if (frame.size() != face::kBlendshapeCount) {
    throw ArgumentError("expand_vertices: expected 52 coefficients, got " +
                        std::to_string(frame.size()));
  }
  Tensor v = rig.base;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const double y = frame[k];
    if (y == 0.0) continue;
    const Tensor& d = rig.deltas[k];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += y * d[i];
  }
  return v;
}

double lve(const std::vector<face::BlendshapeClip>& pred,
           const std::vector<face::BlendshapeClip>& ref, const Rig& rig) {
  if (pred.empty()) throw ArgumentError("lve: no samples");
  if (pred.size() != ref.size()) {
    throw ArgumentError("lve: " + std::to_string(pred.size()) + " predictions for " +
                        std::to_string(ref.size()) + " references");
  }
  rig.validate();
  double total = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const std::size_t frames = std::min(pred[s].frames(), ref[s].frames());
    if (frames == 0) throw ArgumentError("lve: sample " + std::to_string(s) + " has no frames");
    double sample = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      const Tensor vp = expand_vertices(rig, pred[s].coeffs.row(t));
      const Tensor vr = expand_vertices(rig, ref[s].coeffs.row(t));
      double worst = 0.0;
      for (std::size_t i : rig.lip_indices) {
        const double dx = vp(i, 0) - vr(i, 0);
        const double dy = vp(i, 1) - vr(i, 1);
        const double dz = vp(i, 2) - vr(i, 2);
        worst = std::max(worst, std::sqrt(dx * dx + dy * dy + dz * dz));
      }
      sample += worst;
    }
    total += sample / static_cast<double>(frames);
  }
  return total / static_cast<double>(pred.size());
}

// ---- A/B ------------------------------------------------------------------

void RatingSheet::validate() const {
  if (raters < 1) throw ArgumentError("rating sheet: need at least one rater");
  if (labels.empty()) throw ArgumentError("rating sheet: no pairs");
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p].size() != raters) {
      throw ArgumentError("rating sheet: pair " + std::to_string(p) + " has " +
                          std::to_string(labels[p].size()) + " labels, expected " +
                          std::to_string(raters));
    }
  }
}

namespace {

std::array<std::size_t, 3> tally(std::span<const Preference> labels) {
  std::array<std::size_t, 3> c{0, 0, 0};
  for (Preference p : labels) ++c[static_cast<std::size_t>(p)];
  return c;
}

}  // namespace

Preference pair_majority(std::span<const Preference> labels) {
  const auto c = tally(labels);
  const std::size_t best = *std::max_element(c.begin(), c.end());
  const auto leaders = std::count(c.begin(), c.end(), best);
  if (leaders > 1) return Preference::kTie;
  return static_cast<Preference>(std::find(c.begin(), c.end(), best) - c.begin());
}

AbSummary ab_aggregate(const RatingSheet& sheet) {
  sheet.validate();
  std::size_t wins = 0, ties = 0;
  double match_sum = 0.0;
  for (const auto& pair : sheet.labels) {
    const Preference m = pair_majority(pair);
    if (m == Preference::kA) ++wins;
    if (m == Preference::kTie) ++ties;
    const auto c = tally(pair);
    match_sum += static_cast<double>(c[static_cast<std::size_t>(m)]) /
                 static_cast<double>(sheet.raters);
  }
  const double n = static_cast<double>(sheet.labels.size());
  AbSummary s;
  s.win = 100.0 * static_cast<double>(wins) / n;
  s.tie = 100.0 * static_cast<double>(ties) / n;
  s.overall = s.win + 0.5 * s.tie;
  s.mmf = 100.0 * match_sum / n;
  return s;
}

// ---- latency --------------------------------------------------------------

LatencySummary latency_metrics(const std::vector<LatencyRecord>& records) {
  if (records.empty()) throw ArgumentError("latency_metrics: no records");
  LatencySummary s;
  double rtf_sum = 0.0, ttft_sum = 0.0, face_sum = 0.0;
  std::size_t rtf_n = 0;
  for (const auto& r : records) {
    if (r.t_e2e < 0 || r.t_speech < 0 || r.t_first_unit < 0 || r.t_face_extra < 0) {
      throw ArgumentError("latency_metrics: negative duration");
    }
    if (r.t_speech > 0.0) {
      rtf_sum += r.t_e2e / r.t_speech;
      ++rtf_n;
    } else {
      ++s.excluded;
    }
    ttft_sum += r.t_first_unit;
    face_sum += r.t_face_extra;
  }
  const double n = static_cast<double>(records.size());
  if (rtf_n > 0) s.rtf = rtf_sum / static_cast<double>(rtf_n);
  s.ttft = ttft_sum / n;
  s.face_latency = face_sum / n;
  return s;
}

// ---- WER ------------------------------------------------------------------

std::size_t edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

double wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.empty()) throw ArgumentError("wer: empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

}  // namespace exomni::evaluation
