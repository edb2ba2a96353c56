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

#include <array>
#include <cstdint>

namespace exomni::numerics {

// SplitMix64 step. Reference outputs for state 1234567:
//   6457827717110365317, 3203168211198807973, 9817491932198370423, ...
std::uint64_t splitmix64(std::uint64_t& state);

// Mixes a base seed with stream identifiers into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// xoshiro256** seeded through SplitMix64. All model initialization and corpus
// generation draws from this; std:: distributions are avoided because their
// output is implementation-defined.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed);
  static Rng from_state(const State& s);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n) by rejection, n >= 1.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller; the spare deviate is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  const State& state() const { return s_; }

 private:
  Rng() = default;
  State s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace exomni::numerics
