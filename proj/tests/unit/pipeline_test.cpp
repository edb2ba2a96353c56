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
#include <set>

#include "exomni/errors.hpp"
#include "exomni/numerics/ops.hpp"
#include "exomni/pipeline/checkpoint.hpp"
#include "exomni/pipeline/trainer.hpp"

namespace exomni::pipeline {
namespace {

using numerics::bit_equal;

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_model = 16;
  c.heads = 2;
  c.reasoner_layers = 1;
  c.generator_layers = 1;
  c.fusion_depth = 1;
  c.face_encoder_layers = 1;
  return c;
}

CorpusShape shape_of(const ModelConfig& c) {
  CorpusShape s;
  s.text_vocab = c.text_vocab;
  s.unit_vocab = c.unit_vocab;
  s.d_enc = c.d_enc;
  return s;
}

CorpusSizes tiny_sizes() {
  CorpusSizes s;
  s.asr = 12;
  s.tts = 12;
  s.face = 8;
  s.s2s = 8;
  s.t2t = 8;
  s.min_len = 4;
  s.max_len = 7;
  return s;
}

const SyntheticCorpus& tiny_corpus() {
  static const SyntheticCorpus corpus = generate_corpus(11, tiny_sizes(), shape_of(tiny_config()));
  return corpus;
}

StagePlan short_plan(Stage s, std::size_t steps = 4) {
  StageOverrides o;
  o.batch_size = 2;
  o.grad_accum = 1;
  o.max_steps = steps;
  o.lr_scale = 10.0;
  return stage_plan(s, o);
}

std::vector<Tensor> snapshot(const ParameterList& params) {
  std::vector<Tensor> out;
  for (const auto& p : params) out.push_back(p.param->value);
  return out;
}

bool unchanged(const ParameterList& params, const std::vector<Tensor>& before) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!bit_equal(params[i].param->value, before[i])) return false;
  }
  return true;
}

std::vector<double> losses_of(const TrainReport& r) {
  std::vector<double> out;
  for (const auto& s : r.steps) out.push_back(s.loss);
  return out;
}

TEST(StagePlanTable, PublishedRows) {
  const StagePlan p1 = stage_plan(Stage::kI);
  EXPECT_EQ(p1.trainable_groups(), std::vector<ParamGroup>{ParamGroup::kSpeechProjector});
  EXPECT_EQ(p1.group(ParamGroup::kSpeechProjector).lr, 1e-3);
  EXPECT_EQ(p1.epochs, 1u);
  EXPECT_EQ(p1.batch_size, 128u);
  EXPECT_EQ(p1.warmup_ratio, 0.3);

  const StagePlan p2 = stage_plan(Stage::kII);
  EXPECT_EQ(p2.trainable_groups(), std::vector<ParamGroup>{ParamGroup::kUnitGenerator});
  EXPECT_EQ(p2.group(ParamGroup::kUnitGenerator).lr, 1e-4);
  EXPECT_EQ(p2.epochs, 3u);
  EXPECT_EQ(p2.warmup_ratio, 0.1);

  const StagePlan p3 = stage_plan(Stage::kIII);
  EXPECT_EQ(p3.trainable_groups(), std::vector<ParamGroup>{ParamGroup::kFaceDecoder});
  EXPECT_EQ(p3.group(ParamGroup::kFaceDecoder).lr, 1e-3);
  EXPECT_EQ(p3.epochs, 10u);

  const StagePlan p4 = stage_plan(Stage::kIV);
  EXPECT_EQ(p4.trainable_groups(),
            (std::vector<ParamGroup>{ParamGroup::kSpeechProjector, ParamGroup::kReasoner,
                                     ParamGroup::kUnitGenerator, ParamGroup::kFaceDecoder}));
  EXPECT_EQ(p4.group(ParamGroup::kReasoner).lr, 2e-6);
  EXPECT_EQ(p4.group(ParamGroup::kUnitGenerator).lr, 5e-5);
  EXPECT_EQ(p4.group(ParamGroup::kFaceDecoder).lr, 5e-5);
  EXPECT_EQ(p4.batch_size, 8u);
  EXPECT_EQ(p4.grad_accum, 4u);

  for (Stage s : {Stage::kI, Stage::kII, Stage::kIII, Stage::kIV}) {
    const StagePlan p = stage_plan(s);
    EXPECT_FALSE(p.group(ParamGroup::kSpeechEncoder).trainable);
    EXPECT_FALSE(p.group(ParamGroup::kSpeechDecoder).trainable);
  }
}

TEST(StagePlanTable, FrozenStandInsCannotBeUnfrozen) {
  for (ParamGroup g : {ParamGroup::kSpeechEncoder, ParamGroup::kSpeechDecoder}) {
    StageOverrides o;
    o.trainable = {{g, true}};
    EXPECT_THROW(stage_plan(Stage::kIV, o), ConfigError);
  }
  StageOverrides no_rate;
  no_rate.trainable = {{ParamGroup::kReasoner, true}};
  EXPECT_THROW(stage_plan(Stage::kII, no_rate), ConfigError);
}

TEST(StagePlanTable, OverridesApply) {
  StageOverrides o;
  o.lr_scale = 3.0;
  o.batch_size = 16;
  o.max_steps = 2000;
  const StagePlan p = stage_plan(Stage::kII, o);
  EXPECT_DOUBLE_EQ(p.group(ParamGroup::kUnitGenerator).lr, 3e-4);
  EXPECT_EQ(p.batch_size, 16u);
  EXPECT_EQ(p.max_steps, 2000u);
  StageOverrides bad;
  bad.lr_scale = 0.0;
  EXPECT_THROW(stage_plan(Stage::kI, bad), ConfigError);
  bad = {};
  bad.warmup_ratio = 1.5;
  EXPECT_THROW(stage_plan(Stage::kI, bad), ConfigError);
}

TEST(StagePlanTable, NameParsing) {
  EXPECT_EQ(parse_stage("III"), Stage::kIII);
  EXPECT_EQ(parse_stage("4"), Stage::kIV);
  EXPECT_THROW(parse_stage("V"), ArgumentError);
  for (ParamGroup g : kAllGroups) EXPECT_EQ(parse_group(group_name(g)), g);
}

TEST(WarmupLr, LinearRampThenFlat) {
  // warmup covers 3 of 10 steps
  EXPECT_DOUBLE_EQ(warmup_lr(1e-3, 1, 0.3, 10), 1e-3 / 3.0);
  EXPECT_DOUBLE_EQ(warmup_lr(1e-3, 2, 0.3, 10), 2e-3 / 3.0);
  EXPECT_EQ(warmup_lr(1e-3, 3, 0.3, 10), 1e-3);
  EXPECT_EQ(warmup_lr(1e-3, 10, 0.3, 10), 1e-3);
  EXPECT_EQ(warmup_lr(1e-3, 1, 0.0, 10), 1e-3);
  for (std::size_t s = 1; s < 100; ++s) EXPECT_LE(warmup_lr(1.0, s, 0.1, 100), warmup_lr(1.0, s + 1, 0.1, 100));
}

TEST(TotalSteps, CeilingOfSamplesOverBatch) {
  StagePlan p = stage_plan(Stage::kII);
  p.batch_size = 5;
  p.epochs = 3;
  EXPECT_EQ(total_steps(p, tiny_corpus()), 8u);  // ceil(3 * 12 / 5)
  p.max_steps = 4;
  EXPECT_EQ(total_steps(p, tiny_corpus()), 4u);
}

TEST(AdamW, DecayOnlyOnFlaggedParameters) {
  numerics::Parameter w(Tensor::matrix(2, 2, 1.0), true), b(Tensor::matrix(1, 2, 1.0), false);
  numerics::Parameter frozen(Tensor::matrix(1, 2, 1.0), true);
  frozen.trainable = false;
  frozen.grad.fill(5.0);
  AdamW opt;
  opt.step({{"w", &w}, {"b", &b}, {"frozen", &frozen}}, 1, [](const std::string&) { return 0.1; });
  for (double v : w.value.data()) EXPECT_DOUBLE_EQ(v, 1.0 - 0.1 * 0.01);
  for (double v : b.value.data()) EXPECT_EQ(v, 1.0);
  for (double v : frozen.value.data()) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(opt.moments().count("frozen"), 0u);
  EXPECT_THROW(opt.step({{"w", &w}}, 0, [](const std::string&) { return 0.1; }), ArgumentError);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  numerics::Parameter p(Tensor::from_rows({{0.5, -0.5}}));
  p.grad = Tensor::from_rows({{2.0, -3.0}});
  AdamW opt(AdamWConfig{0.9, 0.999, 0.0, 0.0});
  opt.step({{"p", &p}}, 1, [](const std::string&) { return 0.01; });
  EXPECT_NEAR(p.value[0], 0.49, 1e-15);
  EXPECT_NEAR(p.value[1], -0.49, 1e-15);
}

TEST(Corpus, SameSeedIsBitIdentical) {
  const SyntheticCorpus a = generate_corpus(5, tiny_sizes(), shape_of(tiny_config()));
  const SyntheticCorpus b = generate_corpus(5, tiny_sizes(), shape_of(tiny_config()));
  ASSERT_EQ(a.asr.size(), b.asr.size());
  for (std::size_t i = 0; i < a.asr.size(); ++i) {
    EXPECT_EQ(a.asr[i].text, b.asr[i].text);
    EXPECT_TRUE(bit_equal(a.asr[i].features.frames, b.asr[i].features.frames));
  }
  for (std::size_t i = 0; i < a.face.size(); ++i) {
    EXPECT_EQ(a.face[i].units.units, b.face[i].units.units);
    EXPECT_TRUE(bit_equal(a.face[i].clip.coeffs, b.face[i].clip.coeffs));
  }
  for (std::size_t i = 0; i < a.s2s.size(); ++i) EXPECT_EQ(a.s2s[i].response, b.s2s[i].response);
  const SyntheticCorpus c = generate_corpus(6, tiny_sizes(), shape_of(tiny_config()));
  EXPECT_NE(a.t2t[0].prompt, c.t2t[0].prompt);
}

TEST(Corpus, CountsShapesAndRanges) {
  const SyntheticCorpus& c = tiny_corpus();
  const CorpusSizes s = tiny_sizes();
  for (DataKind k : {DataKind::kAsr, DataKind::kTts, DataKind::kFace, DataKind::kS2s, DataKind::kT2t}) {
    EXPECT_EQ(c.count(k), s.count(k));
    EXPECT_EQ(parse_kind(kind_name(k)), k);
  }
  for (const auto& f : c.face) {
    EXPECT_EQ(f.clip.frames(), face::frame_count(f.units.units.size(), c.shape.unit_rate, c.shape.fps));
    for (double v : f.clip.coeffs.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
    for (std::size_t u : f.units.units) EXPECT_LT(u, c.shape.unit_vocab);
  }
  for (const auto& a : c.asr) {
    EXPECT_EQ(a.features.frames.cols(), c.shape.d_enc);
    for (std::size_t t : a.text) EXPECT_LT(t, c.shape.text_vocab);
  }
}

TEST(Corpus, InvalidSizes) {
  CorpusSizes s = tiny_sizes();
  s.min_len = 9;
  EXPECT_THROW(s.validate(), ArgumentError);
}

TEST(Training, OnlyTrainableGroupsChange) {
  ExOmniModel m(tiny_config(), 3);
  const ParameterList gen = m.group(ParamGroup::kUnitGenerator);
  const ParameterList others[] = {m.group(ParamGroup::kSpeechProjector), m.group(ParamGroup::kReasoner),
                                  m.group(ParamGroup::kFaceDecoder)};
  const auto gen_before = snapshot(gen);
  std::vector<std::vector<Tensor>> others_before;
  for (const auto& g : others) others_before.push_back(snapshot(g));
  TrainState state;
  state.seed = 3;
  train_stage(m, short_plan(Stage::kII), tiny_corpus(), state);
  EXPECT_FALSE(unchanged(gen, gen_before));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(unchanged(others[i], others_before[i])) << i;
  EXPECT_TRUE(state.complete);
  EXPECT_EQ(state.step, 4u);
}

TEST(Training, SameSeedSameLossCurve) {
  auto run = [] {
    ExOmniModel m(tiny_config(), 4);
    TrainState state;
    state.seed = 4;
    return losses_of(train_stage(m, short_plan(Stage::kI, 6), tiny_corpus(), state));
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 6u);
  EXPECT_EQ(a, b);
}

TEST(Training, StopAndResumeIsBitExact) {
  const StagePlan plan = short_plan(Stage::kIII, 6);
  ExOmniModel full(tiny_config(), 5);
  TrainState fs;
  fs.seed = 5;
  const auto full_losses = losses_of(train_stage(full, plan, tiny_corpus(), fs));

  ExOmniModel part(tiny_config(), 5);
  TrainState ps;
  ps.seed = 5;
  TrainOptions stop;
  stop.stop_after = 2;
  auto losses = losses_of(train_stage(part, plan, tiny_corpus(), ps, stop));
  EXPECT_FALSE(ps.complete);
  // Round-trip through the checkpoint bytes into a fresh model.
  const Checkpoint ck = decode_checkpoint(encode_checkpoint(capture(part, ps)));
  ExOmniModel resumed(tiny_config(), 999);
  TrainState rs;
  restore(ck, resumed, rs);
  const auto rest = losses_of(train_stage(resumed, plan, tiny_corpus(), rs));
  losses.insert(losses.end(), rest.begin(), rest.end());
  EXPECT_EQ(losses, full_losses);
  EXPECT_EQ(encode_checkpoint(capture(resumed, rs)), encode_checkpoint(capture(full, fs)));
}

TEST(Training, AllStagesRunInOrder) {
  ExOmniModel m(tiny_config(), 6);
  TrainState state;
  state.seed = 6;
  for (Stage s : {Stage::kI, Stage::kII, Stage::kIII, Stage::kIV}) {
    const auto report = train_stage(m, short_plan(s, 3), tiny_corpus(), state);
    ASSERT_EQ(report.steps.size(), 3u);
    for (const auto& r : report.steps) EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_EQ(state.stage, s);
    EXPECT_TRUE(state.complete);
  }
}

TEST(Training, StageIvDrawsEveryKind) {
  ExOmniModel m(tiny_config(), 7);
  TrainState state;
  state.seed = 7;
  const auto report = train_stage(m, short_plan(Stage::kIV, 40), tiny_corpus(), state);
  std::set<DataKind> seen;
  for (const auto& r : report.steps) seen.insert(r.kind);
  const auto kinds = stage_kinds(Stage::kIV);
  EXPECT_EQ(seen, std::set<DataKind>(kinds.begin(), kinds.end()));
}

TEST(Training, MissingKindIsConfigError) {
  CorpusSizes s = tiny_sizes();
  s.face = 0;
  EXPECT_THROW(generate_corpus(1, s, shape_of(tiny_config())), ArgumentError);
  SyntheticCorpus c = tiny_corpus();
  c.face.clear();
  ExOmniModel m(tiny_config(), 1);
  TrainState state;
  EXPECT_THROW(train_stage(m, short_plan(Stage::kIII), c, state), ConfigError);
}

TEST(Training, StageLossDecreases) {
  ExOmniModel m(tiny_config(), 8);
  TrainState state;
  state.seed = 8;
  const double before = evaluate_loss(m, DataKind::kFace, tiny_corpus());
  train_stage(m, short_plan(Stage::kIII, 30), tiny_corpus(), state);
  EXPECT_LT(evaluate_loss(m, DataKind::kFace, tiny_corpus()), before);
}

TEST(Checkpoint, EncodeDecodeEncodeIsIdentical) {
  ExOmniModel m(tiny_config(), 9);
  TrainState state;
  state.seed = 9;
  TrainOptions stop;
  stop.stop_after = 2;
  train_stage(m, short_plan(Stage::kIV, 4), tiny_corpus(), state, stop);
  const std::string bytes = encode_checkpoint(capture(m, state));
  EXPECT_EQ(bytes.substr(0, 4), "EXCK");
  const Checkpoint ck = decode_checkpoint(bytes);
  EXPECT_EQ(ck.step, 2u);
  EXPECT_FALSE(ck.complete);
  EXPECT_EQ(encode_checkpoint(ck), bytes);
}

TEST(Checkpoint, TruncationAndTrailingBytesAreFormatErrors) {
  ExOmniModel m(tiny_config(), 10);
  TrainState state;
  const std::string bytes = encode_checkpoint(capture(m, state));
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, cut)), FormatError) << cut;
  }
  EXPECT_THROW(decode_checkpoint(bytes + "x"), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
}

TEST(Checkpoint, MismatchedRestoreLeavesModelUntouched) {
  ExOmniModel source(tiny_config(), 11);
  TrainState st;
  const Checkpoint ck = capture(source, st);
  ModelConfig other = tiny_config();
  other.d_model = 8;
  ExOmniModel target(other, 12);
  const auto before = snapshot(target.all());
  TrainState ts;
  ts.step = 17;
  EXPECT_THROW(restore(ck, target, ts), ConfigError);
  EXPECT_TRUE(unchanged(target.all(), before));
  EXPECT_EQ(ts.step, 17u);

  Checkpoint trimmed = ck;
  trimmed.blocks.pop_back();
  ExOmniModel same(tiny_config(), 13);
  const auto same_before = snapshot(same.all());
  EXPECT_THROW(restore(trimmed, same, ts), FormatError);
  EXPECT_TRUE(unchanged(same.all(), same_before));
}

TEST(Checkpoint, LoadThenStepMatchesDirectStep) {
  const StagePlan plan = short_plan(Stage::kII, 3);
  ExOmniModel a(tiny_config(), 14);
  TrainState sa;
  sa.seed = 14;
  TrainOptions one;
  one.stop_after = 1;
  train_stage(a, plan, tiny_corpus(), sa, one);
  ExOmniModel b(tiny_config(), 0);
  TrainState sb;
  restore(decode_checkpoint(encode_checkpoint(capture(a, sa))), b, sb);
  TrainOptions two;
  two.stop_after = 2;
  const auto ra = train_stage(a, plan, tiny_corpus(), sa, two);
  const auto rb = train_stage(b, plan, tiny_corpus(), sb, two);
  EXPECT_EQ(losses_of(ra), losses_of(rb));
  EXPECT_EQ(encode_checkpoint(capture(a, sa)), encode_checkpoint(capture(b, sb)));
}

TEST(Generation, DeterministicAndAligned) {
  const ExOmniModel m(tiny_config(), 15);
  const Tokens prompt{3, 9, 10, 11};
  const auto a = generate(m, prompt, std::nullopt, 6, 12);
  const auto b = generate(m, prompt, std::nullopt, 6, 12);
  EXPECT_EQ(a.response, b.response);
  EXPECT_EQ(a.trace.units.units, b.trace.units.units);
  EXPECT_TRUE(bit_equal(a.clip.coeffs, b.clip.coeffs));
  EXPECT_EQ(a.clip.frames(), face::frame_count(a.trace.units.units.size(), a.trace.units.unit_rate, a.clip.fps));
  const auto c = face_from_units(m, units::UnitSequence{{1, 2, 3, 4, 5}});
  EXPECT_EQ(c.frames(), 10u);
}

}  // namespace
}  // namespace exomni::pipeline
