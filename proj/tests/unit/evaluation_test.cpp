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

#include <gtest/gtest.h>

#include <cmath>

#include "exomni/errors.hpp"
#include "exomni/evaluation/metrics.hpp"
#include "test_util.hpp"

namespace exomni::evaluation {
namespace {

using face::BlendshapeClip;
using numerics::Rng;

Rig random_rig(Rng& rng, std::size_t vertices, std::size_t lips) {
  Rig rig;
  rig.base = testing::random_matrix(vertices, 3, rng);
  for (std::size_t k = 0; k < 52; ++k) rig.deltas.push_back(testing::random_matrix(vertices, 3, rng, 0.5));
  for (std::size_t i = 0; i < lips; ++i) rig.lip_indices.push_back((i * 7) % vertices);
  return rig;
}

BlendshapeClip random_clip(Rng& rng, std::size_t frames) {
  Tensor t = Tensor::matrix(frames, 52);
  for (auto& v : t.storage()) v = rng.uniform();
  return BlendshapeClip{t};
}

// Explicit per-vertex expansion, accumulated in the same order as the metric:
// base first, then the 52 deltas in order.
double lve_oracle(const std::vector<BlendshapeClip>& pred, const std::vector<BlendshapeClip>& ref,
                  const Rig& rig) {
  auto vertex = [&](const BlendshapeClip& c, std::size_t t, std::size_t v, std::size_t axis) {
    double x = rig.base(v, axis);
    for (std::size_t k = 0; k < 52; ++k) x += c.coeffs(t, k) * rig.deltas[k](v, axis);
    return x;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t frames = std::min(pred[i].frames(), ref[i].frames());
    double sample = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      double worst = 0.0;
      for (std::size_t v : rig.lip_indices) {
        double sq = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
          const double d = vertex(pred[i], t, v, a) - vertex(ref[i], t, v, a);
          sq += d * d;
        }
        worst = std::max(worst, std::sqrt(sq));
      }
      sample += worst;
    }
    total += sample / static_cast<double>(frames);
  }
  return total / static_cast<double>(pred.size());
}

TEST(ExpandVertices, Linearity) {
  Rng rng(1);
  const Rig rig = random_rig(rng, 6, 2);
  std::vector<double> y(52, 0.0);
  EXPECT_TRUE(numerics::bit_equal(expand_vertices(rig, y), rig.base));
  y[17] = 1.0;
  EXPECT_TRUE(numerics::bit_equal(expand_vertices(rig, y), numerics::add(rig.base, rig.deltas[17])));
  std::vector<double> full(52), half(52);
  for (std::size_t k = 0; k < 52; ++k) half[k] = (full[k] = rng.uniform()) / 2.0;
  const Tensor df = expand_vertices(rig, full), dh = expand_vertices(rig, half);
  for (std::size_t i = 0; i < df.size(); ++i) {
    EXPECT_NEAR(dh[i] - rig.base[i], (df[i] - rig.base[i]) / 2.0, 1e-14);
  }
}

TEST(ExpandVertices, WrongCoefficientCount) {
  Rng rng(1);
  const Rig rig = random_rig(rng, 4, 1);
  EXPECT_THROW(expand_vertices(rig, std::vector<double>(51, 0.0)), ArgumentError);
}

TEST(Lve, BruteForceOracleBitForBit) {
  Rng rng(2024);
  for (int instance = 0; instance < 50; ++instance) {
    const Rig rig = random_rig(rng, 5 + rng.below(12), 1 + rng.below(4));
    std::vector<BlendshapeClip> pred, ref;
    const std::size_t samples = 1 + rng.below(3);
    for (std::size_t s = 0; s < samples; ++s) {
      pred.push_back(random_clip(rng, 1 + rng.below(6)));
      ref.push_back(random_clip(rng, 1 + rng.below(6)));
    }
    EXPECT_EQ(lve(pred, ref, rig), lve_oracle(pred, ref, rig)) << "instance " << instance;
  }
}

TEST(Lve, IdenticalClipsGiveZero) {
  Rng rng(3);
  const Rig rig = make_default_rig();
  const std::vector<BlendshapeClip> c{random_clip(rng, 4), random_clip(rng, 9)};
  EXPECT_EQ(lve(c, c, rig), 0.0);
}

TEST(Lve, TwoLipVertexHandCase) {
  Rig rig;
  rig.base = Tensor::matrix(2, 3);
  rig.deltas.assign(52, Tensor::matrix(2, 3));
  rig.deltas[0] = Tensor::from_rows({{1, 0, 0}, {0, 2, 0}});
  rig.lip_indices = {0, 1};
  BlendshapeClip pred{Tensor::matrix(1, 52)}, ref{Tensor::matrix(1, 52)};
  pred.coeffs(0, 0) = 0.5;
  EXPECT_EQ(lve({pred}, {ref}, rig), 1.0);
}

TEST(Lve, SymmetricAndTruncatesToCommonLength) {
  Rng rng(4);
  const Rig rig = make_default_rig();
  const std::vector<BlendshapeClip> a{random_clip(rng, 5)}, b{random_clip(rng, 8)};
  EXPECT_EQ(lve(a, b, rig), lve(b, a, rig));
  BlendshapeClip b_cut{numerics::slice_rows(b[0].coeffs, 0, 5)};
  EXPECT_EQ(lve(a, b, rig), lve(a, {b_cut}, rig));
  EXPECT_GT(lve(a, b, rig), 0.0);
}

TEST(Lve, Errors) {
  const Rig rig = make_default_rig();
  EXPECT_THROW(lve({}, {}, rig), ArgumentError);
  Rng rng(5);
  EXPECT_THROW(lve({random_clip(rng, 2)}, {}, rig), ArgumentError);
}

TEST(Rig, DefaultRigShape) {
  const Rig rig = make_default_rig();
  EXPECT_EQ(rig.vertex_count(), 16u);
  EXPECT_EQ(rig.lip_indices.size(), 4u);
  EXPECT_EQ(rig.deltas.size(), 52u);
  EXPECT_NO_THROW(rig.validate());
  Rig bad = rig;
  bad.lip_indices.push_back(16);
  EXPECT_THROW(bad.validate(), ArgumentError);
  bad = rig;
  bad.deltas.pop_back();
  EXPECT_THROW(bad.validate(), ArgumentError);
}

// Sheet with `wins` A-majority pairs, `ties` Tie-majority pairs and the rest
// B-majority, 8 unanimous raters each.
RatingSheet sheet_for(std::size_t pairs, std::size_t wins, std::size_t ties) {
  RatingSheet s;
  s.raters = 8;
  for (std::size_t p = 0; p < pairs; ++p) {
    const Preference label = p < wins ? Preference::kA : p < wins + ties ? Preference::kTie : Preference::kB;
    s.labels.emplace_back(8, label);
  }
  return s;
}

TEST(AbAggregate, ReportedRows) {
  struct Row {
    std::size_t wins, ties;
    double win, tie, overall;
  };
  for (const Row& r : {Row{11, 2, 55.0, 10.0, 60.0}, Row{14, 1, 70.0, 5.0, 72.5}, Row{16, 1, 80.0, 5.0, 82.5}}) {
    const AbSummary s = ab_aggregate(sheet_for(20, r.wins, r.ties));
    EXPECT_EQ(s.win, r.win);
    EXPECT_EQ(s.tie, r.tie);
    EXPECT_EQ(s.overall, r.overall);
    EXPECT_EQ(s.mmf, 100.0);
  }
}

TEST(AbAggregate, MajorityMatchFraction) {
  RatingSheet s;
  s.raters = 8;
  using P = Preference;
  s.labels.push_back({P::kA, P::kA, P::kB, P::kA, P::kTie, P::kA, P::kB, P::kA});
  EXPECT_EQ(pair_majority(s.labels[0]), P::kA);
  const AbSummary sum = ab_aggregate(s);
  EXPECT_EQ(sum.mmf, 62.5);
  EXPECT_EQ(sum.win, 100.0);
}

TEST(AbAggregate, PluralityTieResolvesToTie) {
  using P = Preference;
  const std::vector<P> split{P::kA, P::kA, P::kB, P::kB};
  EXPECT_EQ(pair_majority(split), P::kTie);
  const std::vector<P> three{P::kA, P::kB, P::kTie};
  EXPECT_EQ(pair_majority(three), P::kTie);
}

TEST(AbAggregate, Errors) {
  EXPECT_THROW(ab_aggregate(RatingSheet{}), ArgumentError);
  RatingSheet ragged;
  ragged.raters = 2;
  ragged.labels = {{Preference::kA, Preference::kA}, {Preference::kB}};
  EXPECT_THROW(ab_aggregate(ragged), ArgumentError);
}

TEST(Latency, ReportedMagnitude) {
  const auto s = latency_metrics({{4.316, 2.0, 0.5, 0.1}});
  ASSERT_TRUE(s.rtf);
  EXPECT_EQ(*s.rtf, 4.316 / 2.0);
  EXPECT_NEAR(*s.rtf, 2.158, 1e-15);
  EXPECT_EQ(s.ttft, 0.5);
  EXPECT_EQ(s.face_latency, 0.1);
}

TEST(Latency, EqualDurationsGiveUnitRtf) {
  const auto s = latency_metrics({{3.0, 3.0, 0.2, 0.0}, {1.5, 1.5, 0.4, 0.2}});
  EXPECT_EQ(*s.rtf, 1.0);
  EXPECT_NEAR(s.ttft, 0.3, 1e-15);
  EXPECT_NEAR(s.face_latency, 0.1, 1e-15);
}

TEST(Latency, ZeroSpeechExcluded) {
  const auto all_zero = latency_metrics({{0, 0, 0, 0}, {0, 0, 0, 0}});
  EXPECT_FALSE(all_zero.rtf);
  EXPECT_EQ(all_zero.excluded, 2u);
  EXPECT_EQ(all_zero.ttft, 0.0);
  EXPECT_EQ(all_zero.face_latency, 0.0);
  const auto mixed = latency_metrics({{2.0, 1.0, 0.1, 0.0}, {1.0, 0.0, 0.3, 0.0}});
  EXPECT_EQ(*mixed.rtf, 2.0);
  EXPECT_EQ(mixed.excluded, 1u);
  EXPECT_NEAR(mixed.ttft, 0.2, 1e-15);
}

TEST(Latency, RejectsInvalidRecords) {
  EXPECT_THROW(latency_metrics({}), ArgumentError);
  EXPECT_THROW(latency_metrics({{1.0, 1.0, 0.0, -0.1}}), ArgumentError);
  EXPECT_THROW(latency_metrics({{-1.0, 1.0, 0.0, 0.0}}), ArgumentError);
}

TEST(Wer, DerivedCases) {
  const auto ref = split_words("the cat sat");
  EXPECT_EQ(wer(ref, ref), 0.0);
  EXPECT_EQ(wer(ref, split_words("the cat")), 1.0 / 3.0);
  EXPECT_EQ(wer(ref, {}), 1.0);
  EXPECT_EQ(wer(ref, split_words("a cat sat on")), 2.0 / 3.0);
  EXPECT_THROW(wer({}, ref), ArgumentError);
}

// Exhaustive-recursion edit distance for short sequences.
std::size_t edit_oracle(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                        std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = edit_oracle(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  return std::min({sub, edit_oracle(a, i + 1, b, j) + 1, edit_oracle(a, i, b, j + 1) + 1});
}

TEST(Wer, EditDistanceMatchesRecursiveOracle) {
  Rng rng(7);
  const std::vector<std::string> words{"a", "b", "c"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> x(rng.below(6)), y(rng.below(6));
    for (auto& w : x) w = words[rng.below(3)];
    for (auto& w : y) w = words[rng.below(3)];
    EXPECT_EQ(edit_distance(x, y), edit_oracle(x, 0, y, 0));
  }
}

TEST(Wer, AppendingSharedWordNeverIncreasesEdits) {
  Rng rng(8);
  const std::vector<std::string> words{"x", "y", "z", "w"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> x(1 + rng.below(5)), y(rng.below(6));
    for (auto& w : x) w = words[rng.below(4)];
    for (auto& w : y) w = words[rng.below(4)];
    const std::size_t before = edit_distance(x, y);
    x.push_back("shared");
    y.push_back("shared");
    EXPECT_LE(edit_distance(x, y), before);
  }
}

TEST(Wer, SplitWordsOnWhitespace) {
  EXPECT_EQ(split_words("  a\tb  c \n"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_words("   ").empty());
}

}  // namespace
}  // namespace exomni::evaluation
