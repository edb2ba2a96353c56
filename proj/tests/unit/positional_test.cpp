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
#include <complex>

#include "exomni/errors.hpp"
#include "exomni/numerics/gradcheck.hpp"
#include "exomni/numerics/ops.hpp"
#include "exomni/positional/rope.hpp"
#include "test_util.hpp"

namespace exomni::positional {
namespace {

using numerics::bit_equal;
using testing::random_matrix;

const PeriodicRopeConfig kFace{};

TEST(PeriodicPosition, ZeroFrame) { EXPECT_EQ(periodic_position(0, kFace), 0.0); }

TEST(PeriodicPosition, WrapsAfterOnePeriod) { EXPECT_EQ(periodic_position(26, kFace), 1.0); }

TEST(PeriodicPosition, FramesOnePeriodApartMatch) {
  EXPECT_EQ(periodic_position(7, kFace), periodic_position(32, kFace));
  for (std::size_t t = 0; t < 200; ++t) {
    EXPECT_EQ(periodic_position(t, kFace), periodic_position(t + 25, kFace));
  }
}

TEST(PeriodicPosition, AlphaScales) {
  PeriodicRopeConfig cfg;
  cfg.period = 10;
  cfg.alpha = 2.0;
  EXPECT_EQ(periodic_position(13, cfg), 1.5);
}

TEST(PeriodicPosition, ConfigValidation) {
  PeriodicRopeConfig cfg;
  cfg.period = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.alpha = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.base = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ApplyRope, PositionZeroIsIdentity) {
  const Tensor x = random_matrix(1, 8, 1);
  const std::vector<double> pos{0.0};
  EXPECT_TRUE(bit_equal(apply_rope(x, pos), x));
}

TEST(ApplyRope, PreservesPairNorms) {
  numerics::Rng rng(2);
  const Tensor x = random_matrix(30, 16, rng, 4.0);
  std::vector<double> pos(30);
  for (auto& p : pos) p = rng.uniform(0.0, 5000.0);
  const Tensor y = apply_rope(x, pos);
  for (std::size_t r = 0; r < 30; ++r) {
    for (std::size_t i = 0; i < 8; ++i) {
      const double a = std::hypot(x(r, 2 * i), x(r, 2 * i + 1));
      const double b = std::hypot(y(r, 2 * i), y(r, 2 * i + 1));
      EXPECT_NEAR(a, b, 1e-12);
    }
  }
}

TEST(ApplyRope, MatchesComplexRotationOracle) {
  const Tensor x = random_matrix(3, 6, 3);
  const std::vector<double> pos{1.0, 7.0, 24.0};
  const Tensor y = apply_rope(x, pos, 10000.0);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double theta = pos[r] * std::pow(10000.0, -2.0 * i / 6.0);
      const std::complex<double> z(x(r, 2 * i), x(r, 2 * i + 1));
      const auto w = z * std::polar(1.0, theta);
      EXPECT_NEAR(y(r, 2 * i), w.real(), 1e-13);
      EXPECT_NEAR(y(r, 2 * i + 1), w.imag(), 1e-13);
    }
  }
}

TEST(ApplyRope, PeriodicRowsRotateIdentically) {
  const Tensor row = random_matrix(1, 8, 4);
  Tensor x = Tensor::matrix(60, 8);
  for (std::size_t r = 0; r < 60; ++r)
    for (std::size_t c = 0; c < 8; ++c) x(r, c) = row(0, c);
  const Tensor y = apply_rope(x, periodic_positions(60, kFace), kFace.base);
  for (std::size_t t = 0; t + 25 < 60; ++t) {
    for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(y(t, c), y(t + 25, c));
  }
  for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(y(0, c), row(0, c));
}

TEST(ApplyRope, OddWidthIsConfigError) {
  const std::vector<double> pos{1.0};
  EXPECT_THROW(apply_rope(Tensor::matrix(1, 5), pos), ConfigError);
}

TEST(ApplyRope, PositionCountMustMatchRows) {
  const std::vector<double> pos{1.0};
  EXPECT_THROW(apply_rope(Tensor::matrix(2, 4), pos), ShapeError);
}

TEST(ApplyRope, BackwardUndoesForward) {
  const Tensor x = random_matrix(5, 8, 6);
  const auto pos = linear_positions(5, 3);
  EXPECT_LT(numerics::max_abs_diff(apply_rope_backward(apply_rope(x, pos), pos), x), 1e-14);
}

TEST(LinearPositions, OffsetCounts) {
  EXPECT_EQ(linear_positions(3, 2), (std::vector<double>{2.0, 3.0, 4.0}));
}

numerics::GradCheckReport check_rope(std::uint64_t seed) {
  numerics::Rng rng(seed);
  numerics::Parameter x(random_matrix(4, 8, rng));
  const Tensor w = random_matrix(4, 8, rng);
  const std::vector<double> pos{0.0, 3.0, 11.5, 40.0};
  return numerics::finite_diff_check(
      [&] {
        const Tensor y = apply_rope(x.value, pos);
        x.accumulate(apply_rope_backward(w, pos));
        return testing::weighted_sum(y, w);
      },
      {{"x", &x}});
}

TEST(RopeGradients, MatchCentralDifferences) {
  for (std::uint64_t seed : {1, 2, 3}) EXPECT_TRUE(check_rope(seed).passed());
}

TEST(RopeGradients, FlippedBackwardIsCaught) {
  numerics::set_backward_mutation("rope");
  const auto r = check_rope(1);
  numerics::set_backward_mutation("");
  EXPECT_FALSE(r.passed());
}

}  // namespace
}  // namespace exomni::positional
