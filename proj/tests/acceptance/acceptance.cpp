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

// Acceptance run: one PASS/FAIL line per criterion, exit 0 only if all pass.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "exomni/evaluation/metrics.hpp"
#include "exomni/fusion/fusion.hpp"
#include "exomni/io/formats.hpp"
#include "exomni/numerics/ops.hpp"
#include "exomni/objectives/losses.hpp"
#include "exomni/pipeline/checkpoint.hpp"
#include "exomni/pipeline/trainer.hpp"
#include "exomni/positional/rope.hpp"
#include "exomni/verify/suite.hpp"

namespace {

namespace fs = std::filesystem;
using namespace exomni;
using numerics::bit_equal;
using numerics::Rng;
using numerics::Tensor;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t = Tensor::matrix(r, c);
  for (auto& v : t.storage()) v = rng.normal();
  return t;
}

// ---- 1: gradients ---------------------------------------------------------

Verdict gradient_exactness() {
  const double t0 = cpu_seconds();
  verify::SuiteOptions opts;
  opts.seed = 1;
  opts.seeds = 3;
  const auto results = verify::gradient_checks(opts);
  const double cpu = cpu_seconds() - t0;
  std::size_t failed = 0;
  std::string first;
  for (const auto& r : results) {
    if (!r.passed) {
      ++failed;
      if (first.empty()) first = r.name + ": " + r.detail;
    }
  }
  Verdict v;
  v.pass = failed == 0 && cpu < 300.0 && !results.empty();
  v.detail = std::to_string(results.size() - failed) + "/" + std::to_string(results.size()) +
             " checks (3 seeds, step 1e-5, rel < 1e-4), cpu " + fmt("%.1f", cpu) + "s of 300s";
  if (!first.empty()) v.detail += "; first failure " + first;
  return v;
}

// ---- 2: fusion identity -----------------------------------------------------

Verdict fusion_identity() {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    fusion::FusionConfig cfg;
    cfg.heads = 1 + rng.below(4);
    cfg.d_model = cfg.heads * 2 * (1 + rng.below(8));
    cfg.d_context = 1 + rng.below(24);
    cfg.layer_norm = rng.below(2) == 0;
    fusion::FusionStack stack(1 + rng.below(3), cfg, rng, 0.5);
    stack.zero_value_projections();
    const std::size_t m = 1 + rng.below(12);
    const Tensor q = random_tensor(m, cfg.d_model, rng);
    const Tensor c1 = random_tensor(1 + rng.below(12), cfg.context_dim(), rng);
    const Tensor c2 = random_tensor(1 + rng.below(12), cfg.context_dim(), rng);
    if (!bit_equal(fusion::fuse_stack(stack, q, c1), q)) return {false, "case " + std::to_string(i) + ": output != Q"};
    for (const auto& block : stack.blocks) {
      fusion::FusionBlock::Cache a, b;
      block.forward(q, c1, &a);
      block.forward(q, c2, &b);
      const Tensor g = fusion::gate_activations(block, q);  // M x heads x head_dim
      const bool same_values = std::equal(g.data().begin(), g.data().end(), a.gates.data().begin(),
                                          a.gates.data().end());
      if (!bit_equal(a.gates, b.gates) || !same_values) {
        return {false, "case " + std::to_string(i) + ": gate depends on context"};
      }
    }
  }
  return {true, "100 random (M, N, d) cases bit-exact; gates identical under two contexts"};
}

// ---- 3: periodic rotary positions ---------------------------------------------

Verdict periodic_rope() {
  const positional::PeriodicRopeConfig cfg;  // period 25, alpha 1
  if (cfg.period != 25 || cfg.alpha != 1.0) return {false, "unexpected defaults"};
  Rng rng(3);
  const std::size_t d = 64;
  const Tensor x = random_tensor(1, d, rng);
  double worst_norm = 0.0;
  for (std::size_t t = 0; t < 200; ++t) {
    const Tensor a = positional::apply_rope(x, std::vector<double>{positional::periodic_position(t, cfg)}, cfg.base);
    const Tensor b =
        positional::apply_rope(x, std::vector<double>{positional::periodic_position(t + 25, cfg)}, cfg.base);
    if (!bit_equal(a, b)) return {false, "t=" + std::to_string(t) + " and t+25 differ"};
    for (std::size_t i = 0; i < d; i += 2) {
      const double before = std::hypot(x[i], x[i + 1]);
      const double after = std::hypot(a[i], a[i + 1]);
      worst_norm = std::max(worst_norm, std::abs(after - before));
    }
  }
  const Tensor id = positional::apply_rope(x, std::vector<double>{positional::periodic_position(0, cfg)}, cfg.base);
  if (!bit_equal(id, x)) return {false, "t=0 is not the identity"};
  Verdict v;
  v.pass = worst_norm <= 1e-12;
  v.detail = "t vs t+25 bit-identical for t<200; t=0 identity; worst pair-norm drift " + fmt("%.2e", worst_norm);
  return v;
}

// ---- 4: losses ----------------------------------------------------------------

Verdict loss_arithmetic() {
  auto col = [](double a, double b) { return face::BlendshapeClip{Tensor::from_rows({{a}, {b}})}; };
  const objectives::FaceBatch full{{col(0.5, 0.5)}, {col(0.0, 1.0)}, {2}};
  const objectives::FaceBatch masked{{col(0.5, 0.5)}, {col(0.0, 1.0)}, {1}};
  const objectives::FaceBatch vel{{col(0.0, 1.0)}, {col(0.0, 0.0)}, {2}};
  const double bs = objectives::l_bs(full), bs_masked = objectives::l_bs(masked), lv = objectives::l_vel(vel);
  const double face = objectives::l_face(full);  // same batch: l_bs 0.25, l_vel 1
  const double composed = 0.25 + 0.3 * 1.0;
  double worst_ce = 0.0;
  for (std::size_t vocab : {2u, 10u, 64u, 65u, 128u, 1000u}) {
    const Tensor logits = Tensor::matrix(3, vocab, 0.7);
    const std::vector<std::size_t> targets{0, vocab / 2, vocab - 1};
    worst_ce = std::max(worst_ce, std::abs(numerics::cross_entropy(logits, targets) - std::log(double(vocab))));
  }
  Verdict v;
  v.pass = bs == 0.25 && bs_masked == 0.25 && lv == 1.0 && objectives::kDefaultLambdaVel == 0.3 &&
           face == composed && std::abs(face - 0.55) <= 1e-15 && worst_ce <= 1e-12;
  v.detail = "l_bs " + fmt("%.17g", bs) + " (masked " + fmt("%.17g", bs_masked) + "), l_vel " + fmt("%.17g", lv) +
             ", l_face " + fmt("%.17g", face) + ", uniform CE - ln V worst " + fmt("%.1e", worst_ce);
  return v;
}

// ---- 5: stage schedule ------------------------------------------------------

Verdict stage_schedule() {
  using pipeline::ParamGroup;
  using pipeline::Stage;
  struct Row {
    Stage stage;
    std::vector<std::pair<ParamGroup, double>> lrs;
    double warmup;
    std::size_t epochs;
  };
  const std::vector<Row> table{
      {Stage::kI, {{ParamGroup::kSpeechProjector, 1e-3}}, 0.3, 1},
      {Stage::kII, {{ParamGroup::kUnitGenerator, 1e-4}}, 0.1, 3},
      {Stage::kIII, {{ParamGroup::kFaceDecoder, 1e-3}}, 0.1, 10},
      {Stage::kIV,
       {{ParamGroup::kSpeechProjector, 2e-6},
        {ParamGroup::kReasoner, 2e-6},
        {ParamGroup::kUnitGenerator, 5e-5},
        {ParamGroup::kFaceDecoder, 5e-5}},
       0.1,
       3},
  };
  for (const Row& row : table) {
    const auto plan = pipeline::stage_plan(row.stage);
    const std::string s = "stage " + pipeline::stage_name(row.stage);
    if (plan.warmup_ratio != row.warmup || plan.epochs != row.epochs) return {false, s + ": warmup/epochs"};
    std::vector<ParamGroup> expected;
    for (const auto& [g, lr] : row.lrs) {
      expected.push_back(g);
      if (plan.group(g).lr != lr) return {false, s + ": lr of " + pipeline::group_name(g)};
    }
    if (plan.trainable_groups() != expected) return {false, s + ": trainable groups"};
  }

  // Frozen groups stay bit-identical through every stage.
  pipeline::ModelConfig cfg;
  cfg.d_model = 16;
  cfg.heads = 2;
  pipeline::CorpusSizes sizes;
  sizes.asr = sizes.tts = sizes.face = sizes.s2s = sizes.t2t = 8;
  sizes.min_len = 3;
  sizes.max_len = 6;
  pipeline::CorpusShape shape;
  const auto corpus = pipeline::generate_corpus(5, sizes, shape);
  pipeline::ExOmniModel model(cfg, 5);
  pipeline::TrainState state;
  state.seed = 5;
  for (const Row& row : table) {
    pipeline::StageOverrides o;
    o.batch_size = 4;
    o.grad_accum = 1;
    o.max_steps = 3;
    const auto plan = pipeline::stage_plan(row.stage, o);
    std::vector<std::pair<ParamGroup, std::vector<Tensor>>> frozen, trained;
    for (ParamGroup g : pipeline::kAllGroups) {
      std::vector<Tensor> values;
      for (const auto& p : model.group(g)) values.push_back(p.param->value);
      (plan.group(g).trainable ? trained : frozen).emplace_back(g, std::move(values));
    }
    pipeline::train_stage(model, plan, corpus, state);
    for (const auto& [g, values] : frozen) {
      const auto params = model.group(g);
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!bit_equal(params[i].param->value, values[i])) {
          return {false, "stage " + pipeline::stage_name(row.stage) + " changed frozen " + params[i].name};
        }
      }
    }
    for (const auto& [g, values] : trained) {
      const auto params = model.group(g);
      bool moved = false;
      for (std::size_t i = 0; i < params.size(); ++i) moved |= !bit_equal(params[i].param->value, values[i]);
      if (!moved) return {false, "stage " + pipeline::stage_name(row.stage) + " left " + pipeline::group_name(g)};
    }
  }
  return {true, "groups, lrs, warmup and epochs match the published table; frozen groups bit-identical in I-IV"};
}

// ---- 6: learnability --------------------------------------------------------

Verdict learnability() {
  const double t0 = cpu_seconds();
  const auto cfg = pipeline::ModelConfig::desk32();
  pipeline::CorpusShape shape;
  shape.text_vocab = cfg.text_vocab;
  shape.unit_vocab = cfg.unit_vocab;
  shape.d_enc = cfg.d_enc;
  pipeline::CorpusSizes sizes;
  sizes.face = 64;
  const auto corpus = pipeline::generate_corpus(11, sizes, shape);
  pipeline::ExOmniModel model(cfg, 1);
  pipeline::TrainState state;
  state.seed = 5;

  pipeline::StageOverrides two;
  two.batch_size = 16;
  two.max_steps = 2000;
  two.epochs = 1000;
  two.lr_scale = 3.0;
  const double nll0 = pipeline::evaluate_loss(model, pipeline::DataKind::kTts, corpus);
  const auto r2 = pipeline::train_stage(model, pipeline::stage_plan(pipeline::Stage::kII, two), corpus, state);
  const double nll1 = pipeline::evaluate_loss(model, pipeline::DataKind::kTts, corpus);

  pipeline::StageOverrides three;
  three.batch_size = 32;
  three.max_steps = 300;
  three.epochs = 1000;
  const double face0 = pipeline::evaluate_loss(model, pipeline::DataKind::kFace, corpus);
  const auto r3 = pipeline::train_stage(model, pipeline::stage_plan(pipeline::Stage::kIII, three), corpus, state);
  const double face1 = pipeline::evaluate_loss(model, pipeline::DataKind::kFace, corpus);
  const double cpu = cpu_seconds() - t0;
  const double ratio = face0 / face1;

  Verdict v;
  v.pass = std::abs(nll0 - std::log(64.0)) < 0.25 && nll1 < 0.5 && r2.steps.size() <= 2000 && ratio >= 10.0 &&
           r3.steps.size() <= 300 && cpu < 900.0;
  v.detail = "unit NLL " + fmt("%.3f", nll0) + " -> " + fmt("%.3f", nll1) + " in " + std::to_string(r2.steps.size()) +
             " steps (ln 64 = " + fmt("%.3f", std::log(64.0)) + "); l_face " + fmt("%.4f", face0) + " -> " +
             fmt("%.4f", face1) + " (" + fmt("%.1f", ratio) + "x) in " + std::to_string(r3.steps.size()) +
             " steps; cpu " + fmt("%.0f", cpu) + "s of 900s";
  return v;
}

// ---- 7: LVE ----------------------------------------------------------------------

double lve_oracle(const std::vector<face::BlendshapeClip>& pred, const std::vector<face::BlendshapeClip>& ref,
                  const evaluation::Rig& rig) {
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t frames = std::min(pred[i].frames(), ref[i].frames());
    double sample = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      double worst = 0.0;
      for (std::size_t vtx : rig.lip_indices) {
        double sq = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
          double p = rig.base(vtx, a), r = rig.base(vtx, a);
          for (std::size_t k = 0; k < 52; ++k) {
            p += pred[i].coeffs(t, k) * rig.deltas[k](vtx, a);
            r += ref[i].coeffs(t, k) * rig.deltas[k](vtx, a);
          }
          sq += (p - r) * (p - r);
        }
        worst = std::max(worst, std::sqrt(sq));
      }
      sample += worst;
    }
    total += sample / static_cast<double>(frames);
  }
  return total / static_cast<double>(pred.size());
}

face::BlendshapeClip random_clip(Rng& rng, std::size_t frames) {
  Tensor t = Tensor::matrix(frames, 52);
  for (auto& v : t.storage()) v = rng.uniform();
  return face::BlendshapeClip{t};
}

Verdict lve_equivalence() {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    evaluation::Rig rig;
    const std::size_t n = 4 + rng.below(20);
    rig.base = random_tensor(n, 3, rng);
    for (std::size_t k = 0; k < 52; ++k) rig.deltas.push_back(random_tensor(n, 3, rng));
    for (std::size_t j = 0, lips = 1 + rng.below(6); j < lips; ++j) rig.lip_indices.push_back(rng.below(n));
    std::vector<face::BlendshapeClip> pred, ref;
    for (std::size_t s = 0, count = 1 + rng.below(3); s < count; ++s) {
      pred.push_back(random_clip(rng, 1 + rng.below(8)));
      ref.push_back(random_clip(rng, 1 + rng.below(8)));
    }
    const double got = evaluation::lve(pred, ref, rig), want = lve_oracle(pred, ref, rig);
    if (got != want) return {false, "instance " + std::to_string(i) + ": " + fmt("%.17g", got) + " vs " + fmt("%.17g", want)};
    if (evaluation::lve(pred, pred, rig) != 0.0) return {false, "identical clips give nonzero"};
  }
  evaluation::Rig two;
  two.base = Tensor::matrix(2, 3);
  two.deltas.assign(52, Tensor::matrix(2, 3));
  two.deltas[0] = Tensor::from_rows({{1, 0, 0}, {0, 2, 0}});
  two.lip_indices = {0, 1};
  face::BlendshapeClip p{Tensor::matrix(1, 52)}, r{Tensor::matrix(1, 52)};
  p.coeffs(0, 0) = 0.5;
  const double hand = evaluation::lve({p}, {r}, two);
  Verdict v;
  v.pass = hand == 1.0;
  v.detail = "50 random instances bit-identical to the per-vertex oracle; identical clips 0; 2-vertex case " +
             fmt("%.17g", hand);
  return v;
}

// ---- 8: A/B aggregation -----------------------------------------------------

Verdict ab_table() {
  using evaluation::Preference;
  struct Row {
    std::size_t wins, ties;
    double win, tie, overall;
  };
  std::string detail;
  for (const Row& row : {Row{11, 2, 55.0, 10.0, 60.0}, Row{14, 1, 70.0, 5.0, 72.5}, Row{16, 1, 80.0, 5.0, 82.5}}) {
    evaluation::RatingSheet sheet;
    sheet.raters = 8;
    for (std::size_t pair = 0; pair < 20; ++pair) {
      // 5 raters carry the majority, the rest disagree.
      const Preference major = pair < row.wins ? Preference::kA : pair < row.wins + row.ties ? Preference::kTie : Preference::kB;
      const Preference other = major == Preference::kA ? Preference::kB : Preference::kA;
      std::vector<Preference> labels(8, major);
      labels[5] = labels[6] = other;
      labels[7] = major == Preference::kTie ? Preference::kB : Preference::kTie;
      sheet.labels.push_back(labels);
    }
    const auto s = evaluation::ab_aggregate(sheet);
    if (s.win != row.win || s.tie != row.tie || s.overall != row.overall) {
      return {false, "row " + fmt("%.1f", row.win) + ": got " + fmt("%.17g", s.win) + "/" + fmt("%.17g", s.tie) + "/" +
                         fmt("%.17g", s.overall)};
    }
    detail += (detail.empty() ? "" : ", ") + fmt("%.1f", s.win) + "/" + fmt("%.1f", s.tie) + " -> " + fmt("%.1f", s.overall);
  }
  evaluation::RatingSheet mmf;
  mmf.raters = 8;
  mmf.labels.push_back({Preference::kA, Preference::kA, Preference::kA, Preference::kA, Preference::kA,
                        Preference::kB, Preference::kB, Preference::kTie});
  const double m = evaluation::ab_aggregate(mmf).mmf;
  Verdict v;
  v.pass = m == 62.5;
  v.detail = detail + "; 5A/2B/1Tie MMF " + fmt("%.17g", m);
  return v;
}

// ---- 9: latency and WER -------------------------------------------------------

Verdict latency_wer() {
  const auto lat = evaluation::latency_metrics({{4.316, 2.0, 0.0, 0.0}});
  const auto ref = evaluation::split_words("the cat sat");
  const double w0 = evaluation::wer(ref, ref);
  const double w1 = evaluation::wer(ref, evaluation::split_words("the cat"));
  const double w2 = evaluation::wer(ref, {});
  Verdict v;
  v.pass = lat.rtf && *lat.rtf == 4.316 / 2.0 && std::abs(*lat.rtf - 2.158) <= 1e-15 && w0 == 0.0 &&
           w1 == 1.0 / 3.0 && w2 == 1.0;
  v.detail = "RTF " + fmt("%.17g", lat.rtf.value_or(-1)) + "; WER " + fmt("%.17g", w0) + ", " + fmt("%.17g", w1) +
             ", " + fmt("%.17g", w2);
  return v;
}

// ---- 10: determinism and persistence ----------------------------------------

int run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd =
      "cd '" + cwd.string() + "' && '" + std::string(EXOMNI_CLI_PATH) + "' " + args + " >cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Runs the whole pipeline inside `root` with relative paths; with `interrupt`
// Stage II stops after one step and is resumed.
std::string pipeline_run(const fs::path& root, bool interrupt) {
  fs::remove_all(root);
  fs::create_directories(root);
  io::write_file((root / "model.txt").string(),
                 "d_model=16\nheads=2\nreasoner_layers=1\ngenerator_layers=1\nfusion_depth=1\n"
                 "face_encoder_layers=1\nbatch_size=4\nmax_steps=3\n");
  if (run_cli(root, "gen-data --seed 3 --sizes 8 --min-len 3 --max-len 6 --config model.txt --out-dir data") != 0) {
    return "gen-data failed";
  }
  for (const char* stage : {"I", "II", "III", "IV"}) {
    const std::string train = std::string("train --stage ") + stage +
                              " --config model.txt --data-dir data --checkpoint-dir ckpt --seed 3";
    if (interrupt && std::string(stage) == "II") {
      if (run_cli(root, train + " --stop-after 1") != 0) return "interrupted stage II failed";
      if (run_cli(root, train + " --resume") != 0) return "resume of stage II failed";
    } else if (run_cli(root, train) != 0) {
      return std::string("stage ") + stage + " failed";
    }
  }
  if (run_cli(root, "generate --checkpoint ckpt/stage-IV.ckpt --prompt-tokens 3,9,10,11 --out gen") != 0) {
    return "generate failed";
  }
  fs::remove(root / "cli.log");
  return "";
}

Verdict determinism() {
  const fs::path base = fs::temp_directory_path() / "exomni_acceptance";
  const fs::path a = base / "a", b = base / "b";
  if (auto err = pipeline_run(a, false); !err.empty()) return {false, "run a: " + err};
  if (auto err = pipeline_run(b, true); !err.empty()) return {false, "run b: " + err};
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || io::read_file(e.path().string()) != io::read_file((b / rel).string())) {
      return {false, rel.string() + " differs between runs"};
    }
  }
  std::size_t other = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) other += e.is_regular_file();
  if (other != files) return {false, "runs produced different file sets"};

  // In-process save, load, save.
  const auto ck = pipeline::load_checkpoint((a / "ckpt" / "stage-IV.ckpt").string());
  const std::string bytes = pipeline::encode_checkpoint(ck);
  pipeline::ModelConfig cfg = ck.config;
  pipeline::ExOmniModel model(cfg, 99);
  pipeline::TrainState state;
  pipeline::restore(ck, model, state);
  const bool round_trip = pipeline::encode_checkpoint(pipeline::capture(model, state)) == bytes &&
                          bytes == io::read_file((a / "ckpt" / "stage-IV.ckpt").string());
  fs::remove_all(base);
  Verdict v;
  v.pass = round_trip;
  v.detail = std::to_string(files) +
             " artifacts byte-identical across two seeded runs (second run interrupted and resumed in Stage II); "
             "checkpoint save/load/save " +
             (round_trip ? "identical" : "differs");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient exactness", gradient_exactness},
      {"fusion identity law", fusion_identity},
      {"periodic rotary positions", periodic_rope},
      {"loss arithmetic", loss_arithmetic},
      {"stage schedule fidelity", stage_schedule},
      {"desk-scale learnability", learnability},
      {"LVE oracle equivalence", lve_equivalence},
      {"A/B aggregation", ab_table},
      {"latency and WER arithmetic", latency_wer},
      {"determinism and persistence", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%zu] %s (%.1fs): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
