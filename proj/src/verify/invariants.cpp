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

#include <chrono>
#include <cmath>
#include <cstdio>

#include "exomni/errors.hpp"
#include "exomni/evaluation/metrics.hpp"
#include "exomni/fusion/fusion.hpp"
#include "exomni/objectives/losses.hpp"
#include "exomni/pipeline/checkpoint.hpp"
#include "exomni/pipeline/trainer.hpp"
#include "exomni/positional/rope.hpp"
#include "exomni/verify/suite.hpp"

namespace exomni::verify {

namespace {

using numerics::Rng;
using numerics::Tensor;

struct Outcome {
  bool passed;
  std::string detail;
};

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Outcome fusion_identity(std::uint64_t seed) {
  Rng rng(seed);
  for (int i = 0; i < 100; ++i) {
    fusion::FusionConfig cfg;
    cfg.heads = 1 + rng.below(2);
    cfg.d_model = cfg.heads * 2 * (1 + rng.below(4));
    cfg.d_context = 1 + rng.below(8);
    fusion::FusionStack stack(1 + rng.below(3), cfg, rng, 0.5);
    stack.zero_value_projections();
    const Tensor q = random_tensor(1 + rng.below(6), cfg.d_model, rng);
    const Tensor c1 = random_tensor(1 + rng.below(6), cfg.context_dim(), rng);
    const Tensor c2 = random_tensor(1 + rng.below(6), cfg.context_dim(), rng);
    if (!numerics::bit_equal(fusion::fuse_stack(stack, q, c1), q)) {
      return {false, "case " + std::to_string(i) + ": output differs from Q"};
    }
    const auto& block = stack.blocks.front();
    if (!numerics::bit_equal(block.gate_activations(q), block.gate_activations(q))) {
      return {false, "gate activations not deterministic"};
    }
    fusion::FusionBlock::Cache a, b;
    block.forward(q, c1, &a);
    block.forward(q, c2, &b);
    if (!numerics::bit_equal(a.gates, b.gates)) return {false, "gates depend on the context"};
  }
  return {true, "100 random cases bit-exact"};
}

Outcome rope_periodicity(std::uint64_t seed) {
  Rng rng(seed);
  positional::PeriodicRopeConfig cfg;
  const std::size_t d = 16;
  const Tensor row = random_tensor(1, d, rng);
  double worst_norm = 0.0;
  for (std::size_t t = 0; t < 60; ++t) {
    const double a = positional::periodic_position(t, cfg);
    const double b = positional::periodic_position(t + 25, cfg);
    const Tensor ra = positional::apply_rope(row, std::vector<double>{a}, cfg.base);
    const Tensor rb = positional::apply_rope(row, std::vector<double>{b}, cfg.base);
    if (!numerics::bit_equal(ra, rb)) return {false, "t=" + std::to_string(t) + " differs from t+25"};
    for (std::size_t i = 0; i < d; i += 2) {
      const double n0 = std::hypot(row[i], row[i + 1]);
      const double n1 = std::hypot(ra[i], ra[i + 1]);
      worst_norm = std::max(worst_norm, std::abs(n0 - n1));
    }
  }
  if (worst_norm > 1e-12) return {false, "pair norm drift " + num(worst_norm)};
  const Tensor id = positional::apply_rope(row, std::vector<double>{positional::periodic_position(0, cfg)}, cfg.base);
  if (!numerics::bit_equal(id, row)) return {false, "t=0 is not the identity"};
  return {true, "period 25 bit-exact; max pair-norm drift " + num(worst_norm)};
}

Outcome loss_hand_cases(std::uint64_t) {
  auto clip = [](std::vector<double> first_coeff) {
    Tensor t = Tensor::matrix(first_coeff.size(), face::kBlendshapeCount);
    for (std::size_t i = 0; i < first_coeff.size(); ++i) t(i, 0) = first_coeff[i];
    return face::BlendshapeClip{t, 25.0};
  };
  objectives::FaceBatch bs{{clip({0.5, 0.5})}, {clip({0.0, 1.0})}, {2}};
  objectives::FaceBatch vel{{clip({0.0, 1.0})}, {clip({0.0, 0.0})}, {2}};
  const double lbs = objectives::l_bs(bs);
  const double lvel = objectives::l_vel(vel);
  const double lface = lbs + 0.3 * lvel;
  if (lbs != 0.25 || lvel != 1.0 || lface != 0.55) {
    return {false, "l_bs=" + num(lbs) + " l_vel=" + num(lvel) + " l_face=" + num(lface)};
  }
  for (std::size_t v : {2, 7, 64, 128}) {
    const Tensor logits = Tensor::matrix(3, v, 0.25);
    const std::vector<std::size_t> targets{0, v - 1, v / 2};
    const double ce = numerics::cross_entropy(logits, targets);
    if (std::abs(ce - std::log(static_cast<double>(v))) > 1e-12) {
      return {false, "uniform cross-entropy " + num(ce) + " for V=" + std::to_string(v)};
    }
  }
  return {true, "l_bs 0.25, l_vel 1, l_face 0.55, uniform CE = ln V"};
}

Outcome schedule(std::uint64_t) {
  using pipeline::ParamGroup;
  using pipeline::Stage;
  struct Row {
    Stage stage;
    std::size_t epochs;
    double warmup;
    std::vector<std::pair<ParamGroup, double>> trainable;
  };
  const std::vector<Row> rows = {
      {Stage::kI, 1, 0.3, {{ParamGroup::kSpeechProjector, 1e-3}}},
      {Stage::kII, 3, 0.1, {{ParamGroup::kUnitGenerator, 1e-4}}},
      {Stage::kIII, 10, 0.1, {{ParamGroup::kFaceDecoder, 1e-3}}},
      {Stage::kIV, 3, 0.1,
       {{ParamGroup::kSpeechProjector, 2e-6}, {ParamGroup::kReasoner, 2e-6},
        {ParamGroup::kUnitGenerator, 5e-5}, {ParamGroup::kFaceDecoder, 5e-5}}},
  };
  for (const auto& row : rows) {
    const auto plan = pipeline::stage_plan(row.stage);
    if (plan.epochs != row.epochs || plan.warmup_ratio != row.warmup) {
      return {false, "stage " + pipeline::stage_name(row.stage) + " epochs/warmup mismatch"};
    }
    for (auto g : pipeline::kAllGroups) {
      double lr = -1.0;
      for (const auto& [tg, tlr] : row.trainable) {
        if (tg == g) lr = tlr;
      }
      if (plan.group(g).trainable != (lr >= 0.0) || (lr >= 0.0 && plan.group(g).lr != lr)) {
        return {false, "stage " + pipeline::stage_name(row.stage) + " group " + pipeline::group_name(g)};
      }
    }
  }
  pipeline::StageOverrides bad;
  bad.trainable.push_back({ParamGroup::kSpeechEncoder, true});
  try {
    pipeline::stage_plan(Stage::kIV, bad);
    return {false, "unfreezing the speech encoder was accepted"};
  } catch (const ConfigError&) {
  }
  return {true, "four stages match the published schedule"};
}

Outcome frozen_groups(std::uint64_t seed) {
  pipeline::ModelConfig cfg;
  cfg.d_model = 8;
  cfg.heads = 2;
  cfg.d_enc = 4;
  cfg.text_vocab = 16;
  cfg.unit_vocab = 10;
  cfg.reasoner_layers = cfg.generator_layers = cfg.face_encoder_layers = 1;
  pipeline::CorpusShape shape;
  shape.text_vocab = 16;
  shape.unit_vocab = 10;
  shape.d_enc = 4;
  const auto corpus = pipeline::generate_corpus(seed, {4, 4, 4, 4, 4, 3, 5}, shape);
  for (auto stage : {pipeline::Stage::kI, pipeline::Stage::kII, pipeline::Stage::kIII, pipeline::Stage::kIV}) {
    pipeline::ExOmniModel model(cfg, seed);
    pipeline::StageOverrides o;
    o.batch_size = 2;
    o.max_steps = 2;
    const auto plan = pipeline::stage_plan(stage, o);
    std::vector<Tensor> before;
    for (const auto& np : model.all()) before.push_back(np.param->value);
    pipeline::TrainState state;
    state.seed = seed;
    pipeline::train_stage(model, plan, corpus, state);
    std::size_t i = 0;
    bool moved = false;
    for (auto g : pipeline::kAllGroups) {
      for (const auto& np : model.group(g)) {
        const bool same = numerics::bit_equal(np.param->value, before[i++]);
        if (!plan.group(g).trainable && !same) {
          return {false, "stage " + pipeline::stage_name(stage) + " changed frozen " + np.name};
        }
        if (plan.group(g).trainable && !same) moved = true;
      }
    }
    if (!moved) return {false, "stage " + pipeline::stage_name(stage) + " left every parameter unchanged"};
  }
  return {true, "frozen groups bit-identical in every stage"};
}

// Explicit vertex expansion, independent of evaluation::expand_vertices.
double lve_oracle(const std::vector<face::BlendshapeClip>& pred, const std::vector<face::BlendshapeClip>& ref,
                  const evaluation::Rig& rig) {
  double total = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const std::size_t frames = std::min(pred[s].frames(), ref[s].frames());
    double sum = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      double worst = 0.0;
      for (std::size_t v : rig.lip_indices) {
        double sq = 0.0;
        double comp[2][3];
        for (int which = 0; which < 2; ++which) {
          const auto& clip = which == 0 ? pred[s] : ref[s];
          for (std::size_t a = 0; a < 3; ++a) {
            double x = rig.base(v, a);
            for (std::size_t k = 0; k < face::kBlendshapeCount; ++k) {
              const double y = clip.coeffs(t, k);
              if (y != 0.0) x += y * rig.deltas[k](v, a);
            }
            comp[which][a] = x;
          }
        }
        for (std::size_t a = 0; a < 3; ++a) {
          const double d = comp[0][a] - comp[1][a];
          sq += d * d;
        }
        worst = std::max(worst, std::sqrt(sq));
      }
      sum += worst;
    }
    total += sum / static_cast<double>(frames);
  }
  return total / static_cast<double>(pred.size());
}

Outcome lve_checks(std::uint64_t seed) {
  Rng rng(seed);
  for (int i = 0; i < 50; ++i) {
    const auto rig = evaluation::make_default_rig(rng.next_u64(), 4 + rng.below(12), 1 + rng.below(4));
    std::vector<face::BlendshapeClip> pred, ref;
    const std::size_t n = 1 + rng.below(3);
    for (std::size_t s = 0; s < n; ++s) {
      for (auto* list : {&pred, &ref}) {
        Tensor t = Tensor::matrix(1 + rng.below(6), face::kBlendshapeCount);
        for (double& v : t.data()) v = rng.uniform();
        list->push_back({t, 25.0});
      }
    }
    const double got = evaluation::lve(pred, ref, rig);
    const double want = lve_oracle(pred, ref, rig);
    if (got != want) return {false, "instance " + std::to_string(i) + ": " + num(got) + " vs oracle " + num(want)};
    if (evaluation::lve(pred, pred, rig) != 0.0) return {false, "identical clips give nonzero LVE"};
  }
  evaluation::Rig rig;
  rig.base = Tensor::matrix(2, 3);
  rig.deltas.assign(face::kBlendshapeCount, Tensor::matrix(2, 3));
  rig.deltas[0] = Tensor::from_rows({{1, 0, 0}, {0, 2, 0}});
  rig.lip_indices = {0, 1};
  Tensor p = Tensor::matrix(1, face::kBlendshapeCount);
  p(0, 0) = 0.5;
  const double two_vertex = evaluation::lve({{p, 25.0}}, {{Tensor::matrix(1, face::kBlendshapeCount), 25.0}}, rig);
  if (two_vertex != 1.0) return {false, "two-vertex case gives " + num(two_vertex)};
  return {true, "50 random instances match the oracle bit-for-bit; 2-vertex case = 1"};
}

evaluation::RatingSheet sheet_for(std::size_t pairs, std::size_t wins, std::size_t ties) {
  evaluation::RatingSheet s;
  s.raters = 8;
  using evaluation::Preference;
  for (std::size_t p = 0; p < pairs; ++p) {
    const Preference m = p < wins ? Preference::kA : p < wins + ties ? Preference::kTie : Preference::kB;
    std::vector<Preference> labels(6, m);
    labels.push_back(m == Preference::kA ? Preference::kB : Preference::kA);
    labels.push_back(Preference::kTie == m ? Preference::kB : Preference::kTie);
    s.labels.push_back(labels);
  }
  return s;
}

Outcome ab_checks(std::uint64_t) {
  struct Row {
    std::size_t wins, ties;
    double overall;
  };
  for (const auto& r : {Row{11, 2, 60.0}, Row{14, 1, 72.5}, Row{16, 1, 82.5}}) {
    const auto a = evaluation::ab_aggregate(sheet_for(20, r.wins, r.ties));
    if (a.overall != r.overall) return {false, "overall " + num(a.overall) + " expected " + num(r.overall)};
  }
  using evaluation::Preference;
  evaluation::RatingSheet one{8, {{Preference::kA, Preference::kA, Preference::kA, Preference::kA, Preference::kA,
                                   Preference::kB, Preference::kB, Preference::kTie}}};
  const auto a = evaluation::ab_aggregate(one);
  if (a.mmf != 62.5 || a.win != 100.0) return {false, "5A/2B/1Tie gives MMF " + num(a.mmf)};
  return {true, "overall 60.0 / 72.5 / 82.5; MMF 62.5"};
}

Outcome latency_wer(std::uint64_t) {
  const auto l = evaluation::latency_metrics({{4.316, 2.0, 0.5, 0.1}});
  if (!l.rtf || std::abs(*l.rtf - 2.158) > 1e-15) return {false, "RTF " + num(l.rtf.value_or(-1))};
  const auto words = evaluation::split_words;
  const auto ref = words("the cat sat");
  if (evaluation::wer(ref, ref) != 0.0) return {false, "identical WER nonzero"};
  if (evaluation::wer(ref, words("the cat")) != 1.0 / 3.0) return {false, "single deletion WER"};
  if (evaluation::wer(ref, {}) != 1.0) return {false, "empty hypothesis WER"};
  return {true, "RTF 2.158; WER 0, 1/3, 1"};
}

Outcome persistence(std::uint64_t seed) {
  pipeline::CorpusSizes sizes{3, 3, 3, 3, 3, 3, 6};
  const auto a = pipeline::generate_corpus(seed, sizes);
  const auto b = pipeline::generate_corpus(seed, sizes);
  for (std::size_t i = 0; i < a.s2s.size(); ++i) {
    if (!numerics::bit_equal(a.s2s[i].clip.coeffs, b.s2s[i].clip.coeffs) ||
        !numerics::bit_equal(a.s2s[i].question.frames, b.s2s[i].question.frames)) {
      return {false, "corpus regeneration differs"};
    }
    for (double v : a.s2s[i].clip.coeffs.data()) {
      if (!(v > 0.0 && v < 1.0)) return {false, "face target outside (0, 1)"};
    }
  }
  pipeline::ModelConfig cfg;
  cfg.d_model = 8;
  cfg.heads = 2;
  pipeline::ExOmniModel model(cfg, seed);
  pipeline::TrainState state;
  state.seed = seed;
  const std::string bytes = pipeline::encode_checkpoint(pipeline::capture(model, state));
  const std::string again = pipeline::encode_checkpoint(pipeline::decode_checkpoint(bytes));
  if (bytes != again) return {false, "checkpoint re-encode differs"};
  try {
    pipeline::decode_checkpoint(bytes.substr(0, bytes.size() / 2));
    return {false, "truncated checkpoint accepted"};
  } catch (const FormatError&) {
  }
  return {true, "corpus and checkpoint bytes reproduce"};
}

}  // namespace

std::vector<CheckResult> invariant_checks(const SuiteOptions& opts) {
  const std::vector<std::pair<std::string, std::function<Outcome(std::uint64_t)>>> checks = {
      {"fusion identity law", fusion_identity},
      {"periodic rotary positions", rope_periodicity},
      {"loss hand cases", loss_hand_cases},
      {"stage schedule", schedule},
      {"freeze contract", frozen_groups},
      {"lip vertex error", lve_checks},
      {"A/B aggregation", ab_checks},
      {"latency and WER", latency_wer},
      {"corpus and checkpoint determinism", persistence},
  };
  std::vector<CheckResult> out;
  for (const auto& [name, fn] : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    r.name = "invariant: " + name;
    try {
      const Outcome o = fn(opts.seed);
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opts.on_result) opts.on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

Suite parse_suite(const std::string& text) {
  if (text == "gradients") return Suite::kGradients;
  if (text == "invariants") return Suite::kInvariants;
  if (text == "all") return Suite::kAll;
  throw ArgumentError("unknown suite '" + text + "' (expected gradients, invariants or all)");
}

std::vector<CheckResult> run_suite(Suite suite, const SuiteOptions& opts) {
  std::vector<CheckResult> out;
  if (suite != Suite::kInvariants) out = gradient_checks(opts);
  if (suite != Suite::kGradients) {
    auto inv = invariant_checks(opts);
    out.insert(out.end(), inv.begin(), inv.end());
  }
  return out;
}

}  // namespace exomni::verify
