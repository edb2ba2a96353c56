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
#include <optional>
#include <string>
#include <vector>

#include "exomni/pipeline/model.hpp"
#include "exomni/pipeline/trainer.hpp"

namespace exomni::pipeline {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ParamBlock {
  std::string name;
  Tensor value;
  std::optional<Moments> moments;
};

struct Checkpoint {
  ModelConfig config;
  Stage stage = Stage::kI;
  std::size_t step = 0;
  std::size_t total_steps = 0;
  bool complete = false;
  std::uint64_t seed = 0;
  std::vector<ParamBlock> blocks;
};

Checkpoint capture(ExOmniModel& model, const TrainState& state);
// Validates every block name and shape before touching `model` or `state`.
void restore(const Checkpoint& ckpt, ExOmniModel& model, TrainState& state);

// Little-endian: "EXCK", u32 version, u64-prefixed config text, stage/step
// counters and seed, then one block per parameter (name, shape, value,
// optional Adam moments).
std::string encode_checkpoint(const Checkpoint& ckpt);
// Throws FormatError on bad magic, version, truncation or trailing bytes.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace exomni::pipeline
