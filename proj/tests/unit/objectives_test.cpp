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
#include <limits>

#include "exomni/errors.hpp"
#include "exomni/numerics/gradcheck.hpp"
#include "exomni/objectives/losses.hpp"
#include "test_util.hpp"

namespace exomni::objectives {
namespace {

using face::BlendshapeClip;
using testing::random_matrix;

BlendshapeClip column(std::initializer_list<double> values) {
  return BlendshapeClip{Tensor({values.size(), 1}, std::vector<double>(values))};
}

FaceBatch hand_bs_batch(std::size_t valid) {
  return FaceBatch{{column({0.5, 0.5})}, {column({0.0, 1.0})}, {valid}};
}

FaceBatch hand_vel_batch() { return FaceBatch{{column({0.0, 1.0})}, {column({0.0, 0.0})}, {2}}; }

BlendshapeClip random_clip(std::size_t frames, numerics::Rng& rng) {
  Tensor t = Tensor::matrix(frames, 52);
  for (auto& v : t.storage()) v = rng.uniform();
  return BlendshapeClip{t};
}

FaceBatch random_batch(std::uint64_t seed, std::vector<std::size_t> frames, std::vector<std::size_t> valid) {
  numerics::Rng rng(seed);
  FaceBatch b;
  for (std::size_t f : frames) {
    b.predicted.push_back(random_clip(f, rng));
    b.target.push_back(random_clip(f, rng));
  }
  b.valid_lengths = std::move(valid);
  return b;
}

// Direct transcription of the per-frame squared-error sums.
double l_bs_oracle(const FaceBatch& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < b.valid_lengths[i]; ++t)
      for (std::size_t k = 0; k < b.predicted[i].coeffs.cols(); ++k) {
        const double d = b.predicted[i].coeffs(t, k) - b.target[i].coeffs(t, k);
        s += d * d;
      }
    total += s / b.valid_lengths[i];
  }
  return total / b.size();
}

double l_vel_oracle(const FaceBatch& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const std::size_t v = b.valid_lengths[i];
    if (v < 2) continue;
    double s = 0.0;
    for (std::size_t t = 1; t < v; ++t)
      for (std::size_t k = 0; k < b.predicted[i].coeffs.cols(); ++k) {
        const auto& p = b.predicted[i].coeffs;
        const auto& y = b.target[i].coeffs;
        const double d = (p(t, k) - p(t - 1, k)) - (y(t, k) - y(t - 1, k));
        s += d * d;
      }
    total += s / static_cast<double>(v - 1);
  }
  return total / b.size();
}

TEST(LossBs, HandCase) { EXPECT_EQ(l_bs(hand_bs_batch(2)), 0.25); }

TEST(LossBs, MaskedHandCase) { EXPECT_EQ(l_bs(hand_bs_batch(1)), 0.25); }

TEST(LossBs, ZeroWhenEqual) {
  FaceBatch b = random_batch(1, {4, 6}, {4, 5});
  b.target = b.predicted;
  EXPECT_EQ(l_bs(b), 0.0);
  EXPECT_EQ(l_vel(b), 0.0);
  EXPECT_EQ(l_face(b), 0.0);
}

TEST(LossBs, MatchesOracle) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const FaceBatch b = random_batch(seed, {5, 3, 8}, {5, 1, 6});
    EXPECT_NEAR(l_bs(b), l_bs_oracle(b), 1e-13);
    EXPECT_NEAR(l_vel(b), l_vel_oracle(b), 1e-13);
  }
}

TEST(LossVel, HandCase) { EXPECT_EQ(l_vel(hand_vel_batch()), 1.0); }

TEST(LossVel, ConstantOffsetIsZero) {
  FaceBatch b = random_batch(4, {6}, {6});
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t k = 0; k < 52; ++k) b.predicted[0].coeffs(t, k) = b.target[0].coeffs(t, k) + 0.125 * (k % 3);
  EXPECT_NEAR(l_vel(b), 0.0, 1e-28);
  EXPECT_GT(l_bs(b), 0.0);
}

TEST(LossVel, SingleFrameSampleContributesZero) {
  FaceBatch single = random_batch(5, {3}, {1});
  EXPECT_EQ(l_vel(single), 0.0);
  FaceBatch mixed = random_batch(6, {4, 3}, {4, 1});
  FaceBatch first_only{{mixed.predicted[0]}, {mixed.target[0]}, {4}};
  EXPECT_NEAR(l_vel(mixed), l_vel(first_only) / 2.0, 1e-15);
}

TEST(LossFace, HandCompositionWithDefaultLambda) {
  EXPECT_EQ(kDefaultLambdaVel, 0.3);
  EXPECT_EQ(l_bs(hand_bs_batch(2)) + kDefaultLambdaVel * l_vel(hand_vel_batch()), 0.25 + 0.3 * 1.0);
  // pred (0.5, 0.5) against target (0, 1): l_bs 0.25 and a velocity error of 1.
  const double face = l_face(hand_bs_batch(2));
  EXPECT_EQ(face, 0.25 + 0.3 * 1.0);
  EXPECT_NEAR(face, 0.55, 1e-15);
}

TEST(LossFace, LambdaZeroIsBs) {
  const FaceBatch b = random_batch(7, {5, 4}, {5, 4});
  EXPECT_EQ(l_face(b, LossWeights{0.0}), l_bs(b));
}

TEST(Losses, IgnorePaddingBeyondValidLength) {
  FaceBatch a = random_batch(8, {6, 6}, {3, 4});
  FaceBatch b = a;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t t = a.valid_lengths[i]; t < 6; ++t)
      for (std::size_t k = 0; k < 52; ++k) {
        b.predicted[i].coeffs(t, k) = 0.999;
        b.target[i].coeffs(t, k) = 0.001;
      }
  EXPECT_EQ(l_bs(a), l_bs(b));
  EXPECT_EQ(l_vel(a), l_vel(b));
}

TEST(Losses, DuplicatingSamplesKeepsMean) {
  const FaceBatch a = random_batch(9, {4, 7}, {4, 5});
  FaceBatch d = a;
  d.predicted.insert(d.predicted.end(), a.predicted.begin(), a.predicted.end());
  d.target.insert(d.target.end(), a.target.begin(), a.target.end());
  d.valid_lengths.insert(d.valid_lengths.end(), a.valid_lengths.begin(), a.valid_lengths.end());
  EXPECT_NEAR(l_bs(a), l_bs(d), 1e-15);
  EXPECT_NEAR(l_vel(a), l_vel(d), 1e-15);
}

TEST(Losses, NonNegativeOnRandomBatches) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FaceBatch b = random_batch(seed, {3, 5}, {2, 5});
    EXPECT_GT(l_bs(b), 0.0);
    EXPECT_GT(l_vel(b), 0.0);
  }
}

TEST(Losses, InvalidBatches) {
  EXPECT_THROW(l_bs(hand_bs_batch(3)), MaskError);
  EXPECT_THROW(l_vel(hand_bs_batch(3)), MaskError);
  EXPECT_THROW(l_bs(hand_bs_batch(0)), MaskError);
  EXPECT_THROW(l_bs(FaceBatch{}), ArgumentError);
  FaceBatch mismatch{{column({0.5})}, {BlendshapeClip{Tensor::matrix(1, 2)}}, {1}};
  EXPECT_THROW(l_bs(mismatch), ShapeError);
}

TEST(FaceGradient, MatchesCentralDifferences) {
  for (std::uint64_t seed : {1, 2, 3}) {
    FaceBatch b = random_batch(seed, {5, 4, 2}, {5, 2, 1});
    numerics::ParameterList params;
    std::vector<numerics::Parameter> preds;
    for (const auto& c : b.predicted) preds.emplace_back(c.coeffs);
    for (std::size_t i = 0; i < preds.size(); ++i) params.push_back({"pred" + std::to_string(i), &preds[i]});
    const auto report = numerics::finite_diff_check(
        [&] {
          for (std::size_t i = 0; i < preds.size(); ++i) b.predicted[i].coeffs = preds[i].value;
          const auto g = l_face_grad(b);
          for (std::size_t i = 0; i < preds.size(); ++i) preds[i].accumulate(g[i]);
          return l_face(b);
        },
        params);
    EXPECT_TRUE(report.passed()) << report.summary();
  }
}

TEST(FaceGradient, ZeroBeyondValidRange) {
  const FaceBatch b = random_batch(3, {6}, {3});
  const auto g = l_face_grad(b);
  for (std::size_t t = 3; t < 6; ++t)
    for (std::size_t k = 0; k < 52; ++k) EXPECT_EQ(g[0](t, k), 0.0);
}

TEST(TotalLoss, Addition) {
  EXPECT_EQ(total_loss({{1.0}}, 0.55), 1.55);
  EXPECT_EQ(total_loss({}, 0.55), 0.55);
  EXPECT_EQ(total_loss({{0.7}, {0.2}}, std::nullopt), 0.7 + 0.2);
  EXPECT_EQ(total_loss({{2.0, 0.5}}, std::nullopt), 1.0);
}

TEST(TotalLoss, NonFiniteRaises) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(total_loss({{nan}}, 0.1), NumericError);
  EXPECT_THROW(total_loss({{1.0}}, nan), NumericError);
  EXPECT_THROW(total_loss({{std::numeric_limits<double>::infinity()}}, std::nullopt), NumericError);
}

}  // namespace
}  // namespace exomni::objectives
