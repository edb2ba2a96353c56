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

#include "exomni/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "exomni/errors.hpp"
#include "exomni/evaluation/metrics.hpp"
#include "exomni/io/formats.hpp"
#include "exomni/numerics/ops.hpp"
#include "exomni/pipeline/checkpoint.hpp"
#include "exomni/pipeline/trainer.hpp"
#include "exomni/verify/suite.hpp"

namespace exomni::cli {

namespace fs = std::filesystem;
using io::KeyValues;
using pipeline::Stage;

namespace {

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw ArgumentError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ArgumentError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::vector<std::size_t> parse_ids(const std::string& text) {
  std::string spaced = text;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::istringstream in(spaced);
  std::vector<std::size_t> ids;
  for (std::string tok; in >> tok;) ids.push_back(parse_u64("token list", tok));
  return ids;
}

// Flag beats EXOMNI_SEED beats the default.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("EXOMNI_SEED")) return parse_u64("EXOMNI_SEED", env);
  return fallback;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir + "'");
}

KeyValues read_config(const std::string& path) {
  return path.empty() ? KeyValues{} : io::read_kv_file(path);
}

void reject_unknown(const KeyValues& kv, const std::string& source) {
  if (kv.empty()) return;
  std::string keys;
  for (const auto& [k, v] : kv) keys += (keys.empty() ? "" : ", ") + k;
  throw ConfigError(source + ": unknown key(s) " + keys);
}

template <typename T>
std::optional<T> take_key(KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  std::optional<T> out;
  if constexpr (std::is_same_v<T, double>) {
    out = parse_real(key, it->second);
  } else {
    out = static_cast<T>(parse_u64(key, it->second));
  }
  kv.erase(it);
  return out;
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string sizes;
  std::string config;
  std::optional<std::size_t> min_len, max_len;
};

pipeline::CorpusSizes parse_sizes(const std::string& text, pipeline::CorpusSizes sizes) {
  if (text.empty()) return sizes;
  const auto n = parse_ids(text);
  if (n.size() == 1) {
    sizes.asr = sizes.tts = sizes.face = sizes.s2s = sizes.t2t = n[0];
  } else if (n.size() == 5) {
    sizes.asr = n[0];
    sizes.tts = n[1];
    sizes.face = n[2];
    sizes.s2s = n[3];
    sizes.t2t = n[4];
  } else {
    throw ArgumentError("--sizes takes one count or five (asr,tts,face,s2s,t2t)");
  }
  return sizes;
}

pipeline::CorpusShape shape_of(const pipeline::ModelConfig& m) {
  pipeline::CorpusShape s;
  s.text_vocab = m.text_vocab;
  s.unit_vocab = m.unit_vocab;
  s.d_enc = m.d_enc;
  return s;
}

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  KeyValues kv = read_config(a.config);
  const auto model = pipeline::ModelConfig::take_from(kv);
  const auto seed_key = take_key<std::uint64_t>(kv, "seed");
  // Schedule keys belong to `train`; one run config may serve both commands.
  for (const char* k : {"epochs", "batch_size", "grad_accum", "max_steps", "warmup_ratio", "lr_scale"}) kv.erase(k);
  reject_unknown(kv, a.config);

  pipeline::CorpusSizes sizes = parse_sizes(a.sizes, {});
  if (a.min_len) sizes.min_len = *a.min_len;
  if (a.max_len) sizes.max_len = *a.max_len;
  for (auto k : {pipeline::DataKind::kAsr, pipeline::DataKind::kTts, pipeline::DataKind::kFace,
                 pipeline::DataKind::kS2s, pipeline::DataKind::kT2t}) {
    if (sizes.count(k) == 0) throw ArgumentError("--sizes: " + pipeline::kind_name(k) + " count is 0");
  }
  sizes.validate();
  const std::uint64_t seed = resolve_seed(a.seed ? a.seed : seed_key, 0);

  const auto corpus = pipeline::generate_corpus(seed, sizes, shape_of(model));
  ensure_dir(a.out_dir);
  io::write_corpus(a.out_dir, corpus);

  KeyValues resolved = model.to_kv();
  resolved["seed"] = std::to_string(seed);
  resolved["sizes"] = std::to_string(sizes.asr) + "," + std::to_string(sizes.tts) + "," +
                      std::to_string(sizes.face) + "," + std::to_string(sizes.s2s) + "," +
                      std::to_string(sizes.t2t);
  resolved["min_len"] = std::to_string(sizes.min_len);
  resolved["max_len"] = std::to_string(sizes.max_len);
  io::write_kv_file((fs::path(a.out_dir) / "config.txt").string(), resolved);
  out << "wrote corpus (" << resolved["sizes"] << ") to " << a.out_dir << "\n";
  return kOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string stage;
  std::string config;
  std::string data_dir;
  std::string out_dir;
  std::string init;
  bool resume = false;
  bool from_scratch = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps, batch_size, epochs, grad_accum, stop_after, save_every;
  std::optional<double> lr_scale, warmup_ratio;
};

std::string ckpt_path(const std::string& dir, Stage s) {
  return (fs::path(dir) / ("stage-" + pipeline::stage_name(s) + ".ckpt")).string();
}

std::string loss_path(const std::string& dir, Stage s) {
  return (fs::path(dir) / ("stage-" + pipeline::stage_name(s) + ".loss.csv")).string();
}

const char* kLossHeader = "step,kind,loss,lr_factor\n";

std::string loss_row(const pipeline::StepRecord& r) {
  return std::to_string(r.step) + "," + pipeline::kind_name(r.kind) + "," + fmt(r.loss) + "," +
         fmt(r.lr_factor) + "\n";
}

// Header plus the first `steps` rows of an existing loss log.
std::string loss_prefix(const std::string& path, std::size_t steps) {
  std::istringstream in(io::read_file(path));
  std::string line, out;
  if (!std::getline(in, line) || line + "\n" != kLossHeader) {
    throw FormatError("loss log '" + path + "' has no header", 1);
  }
  out = kLossHeader;
  for (std::size_t i = 0; i < steps; ++i) {
    if (!std::getline(in, line)) throw FormatError("loss log '" + path + "' is shorter than the checkpoint", i + 2);
    out += line + "\n";
  }
  return out;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Stage stage = pipeline::parse_stage(a.stage);
  KeyValues kv = read_config(a.config);
  const KeyValues model_keys = kv;
  auto cfg = pipeline::ModelConfig::take_from(kv);
  pipeline::StageOverrides o;
  o.epochs = take_key<std::size_t>(kv, "epochs");
  o.batch_size = take_key<std::size_t>(kv, "batch_size");
  o.grad_accum = take_key<std::size_t>(kv, "grad_accum");
  o.max_steps = take_key<std::size_t>(kv, "max_steps");
  o.warmup_ratio = take_key<double>(kv, "warmup_ratio");
  o.lr_scale = take_key<double>(kv, "lr_scale");
  const auto seed_key = take_key<std::uint64_t>(kv, "seed");
  reject_unknown(kv, a.config);
  if (a.epochs) o.epochs = a.epochs;
  if (a.batch_size) o.batch_size = a.batch_size;
  if (a.grad_accum) o.grad_accum = a.grad_accum;
  if (a.max_steps) o.max_steps = a.max_steps;
  if (a.warmup_ratio) o.warmup_ratio = a.warmup_ratio;
  if (a.lr_scale) o.lr_scale = a.lr_scale;
  const auto plan = pipeline::stage_plan(stage, o);
  const std::uint64_t seed = resolve_seed(a.seed ? a.seed : seed_key, 0);

  const auto corpus = io::read_corpus(a.data_dir);
  ensure_dir(a.out_dir);
  const std::string ckpt_out = ckpt_path(a.out_dir, stage);
  const std::string log_out = loss_path(a.out_dir, stage);

  // Where the starting weights come from.
  std::optional<pipeline::Checkpoint> start;
  if (a.resume && fs::exists(ckpt_out)) {
    start = pipeline::load_checkpoint(ckpt_out);
    if (start->stage != stage) throw ConfigError("--resume: '" + ckpt_out + "' belongs to another stage");
  } else if (!a.init.empty()) {
    start = pipeline::load_checkpoint(a.init);
  } else if (stage != Stage::kI && !a.from_scratch) {
    const Stage prev = static_cast<Stage>(static_cast<int>(stage) - 1);
    const std::string expected = ckpt_path(a.out_dir, prev);
    if (!fs::exists(expected)) {
      throw ConfigError("stage " + pipeline::stage_name(stage) + " needs the stage " + pipeline::stage_name(prev) +
                        " checkpoint '" + expected + "' (or --from-scratch)");
    }
    start = pipeline::load_checkpoint(expected);
    if (start->stage != prev || !start->complete) {
      throw ConfigError("'" + expected + "' is not a finished stage " + pipeline::stage_name(prev) + " checkpoint");
    }
  }
  if (start) {
    const KeyValues given = cfg.to_kv();
    for (const auto& [k, v] : start->config.to_kv()) {
      if (model_keys.count(k) != 0 && given.at(k) != v) {
        throw ConfigError("config key '" + k + "' disagrees with the checkpoint");
      }
    }
    cfg = start->config;
  }
  if (corpus.shape.text_vocab != cfg.text_vocab || corpus.shape.unit_vocab != cfg.unit_vocab ||
      corpus.shape.d_enc != cfg.d_enc) {
    throw ConfigError("corpus vocabularies or feature width do not match the model config");
  }

  pipeline::ExOmniModel model(cfg, seed);
  pipeline::TrainState state;
  state.seed = seed;
  const bool resuming = start && start->stage == stage && !start->complete && a.resume;
  if (start) {
    pipeline::restore(*start, model, state);
    state.seed = seed;
    if (resuming && start->seed != seed) throw ConfigError("--resume: seed differs from the checkpoint");
  }
  if (start && start->stage == stage && start->complete && a.resume) {
    out << "stage " << pipeline::stage_name(stage) << " already complete\n";
    return kOk;
  }

  std::string log = resuming ? loss_prefix(log_out, state.step) : kLossHeader;
  pipeline::TrainOptions opts;
  opts.stop_after = a.stop_after.value_or(0);
  std::size_t since_save = 0;
  opts.on_step = [&](const pipeline::StepRecord& r) {
    log += loss_row(r);
    if (a.save_every && ++since_save >= *a.save_every) {
      since_save = 0;
      pipeline::save_checkpoint(ckpt_out, pipeline::capture(model, state));
      io::write_file(log_out, log);
    }
  };
  const auto report = pipeline::train_stage(model, plan, corpus, state, opts);
  pipeline::save_checkpoint(ckpt_out, pipeline::capture(model, state));
  io::write_file(log_out, log);

  KeyValues resolved = cfg.to_kv();
  resolved["stage"] = pipeline::stage_name(stage);
  resolved["seed"] = std::to_string(seed);
  resolved["epochs"] = std::to_string(plan.epochs);
  resolved["batch_size"] = std::to_string(plan.batch_size);
  resolved["grad_accum"] = std::to_string(plan.grad_accum);
  resolved["warmup_ratio"] = fmt(plan.warmup_ratio);
  resolved["max_steps"] = std::to_string(plan.max_steps);
  resolved["total_steps"] = std::to_string(state.total_steps);
  resolved["data_dir"] = a.data_dir;
  for (auto g : pipeline::kAllGroups) {
    resolved["lr." + pipeline::group_name(g)] = fmt(plan.group(g).trainable ? plan.group(g).lr : 0.0);
  }
  io::write_kv_file((fs::path(a.out_dir) / ("stage-" + pipeline::stage_name(stage) + ".config.txt")).string(),
                    resolved);

  out << "stage " << pipeline::stage_name(stage) << ": " << state.step << "/" << state.total_steps << " steps";
  if (!report.steps.empty()) out << ", last loss " << fmt(report.steps.back().loss);
  out << (state.complete ? "" : " (interrupted)") << "\n";
  return kOk;
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string checkpoint;
  std::string prompt_tokens;
  std::string units_file;
  std::string out_dir;
  std::size_t max_tokens = 32;
  std::size_t max_units = 96;
  std::optional<std::uint64_t> sample_seed;
};

std::string clip_text(const face::BlendshapeClip& clip) {
  std::ostringstream s;
  io::write_clip(s, clip);
  return s.str();
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (a.prompt_tokens.empty() == a.units_file.empty()) {
    throw ArgumentError("give exactly one of --prompt-tokens and --units-file");
  }
  const auto ckpt = pipeline::load_checkpoint(a.checkpoint);
  pipeline::ExOmniModel model(ckpt.config, ckpt.seed);
  pipeline::TrainState state;
  pipeline::restore(ckpt, model, state);
  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);

  KeyValues resolved = ckpt.config.to_kv();
  resolved["checkpoint"] = a.checkpoint;
  resolved["decode"] = a.sample_seed ? "sampled" : "greedy";
  if (a.sample_seed) resolved["sample_seed"] = std::to_string(*a.sample_seed);

  if (!a.units_file.empty()) {
    std::ifstream in(a.units_file);
    if (!in) throw IoError("cannot open units file '" + a.units_file + "'");
    const auto records = io::read_units(in);
    for (const auto& r : records) {
      for (std::size_t u : r.units) {
        if (u >= ckpt.config.unit_vocab) {
          throw FormatError("units file: unit " + std::to_string(u) + " of '" + r.id + "' is outside the vocabulary");
        }
      }
      const auto clip = pipeline::face_from_units(model, units::UnitSequence{r.units, units::kDefaultUnitRate});
      io::write_file((dir / (r.id + ".csv")).string(), clip_text(clip));
      out << r.id << ": " << r.units.size() << " units -> " << clip.frames() << " frames\n";
    }
    resolved["units_file"] = a.units_file;
  } else {
    const auto prompt = parse_ids(a.prompt_tokens);
    if (prompt.empty()) throw ArgumentError("--prompt-tokens is empty");
    for (std::size_t t : prompt) {
      if (t >= ckpt.config.text_vocab) throw ArgumentError("prompt token " + std::to_string(t) + " outside the vocabulary");
    }
    const auto decode = a.sample_seed ? nn::DecodeOptions::sampled(*a.sample_seed) : nn::DecodeOptions::greedy();
    const auto g = pipeline::generate(model, prompt, std::nullopt, a.max_tokens, a.max_units, decode);
    std::ostringstream units_out, text_out;
    io::write_units(units_out, {{"response", g.trace.units.units}});
    io::write_units(text_out, {{"response", g.response}});
    io::write_file((dir / "units.txt").string(), units_out.str());
    io::write_file((dir / "response.txt").string(), text_out.str());
    io::write_file((dir / "clip.csv").string(), clip_text(g.clip));
    resolved["prompt_tokens"] = a.prompt_tokens;
    resolved["max_tokens"] = std::to_string(a.max_tokens);
    resolved["max_units"] = std::to_string(a.max_units);
    out << g.response.size() << " tokens, " << g.trace.units.units.size() << " units, " << g.clip.frames()
        << " frames\n";
  }
  io::write_kv_file((dir / "config.txt").string(), resolved);
  return kOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string metric;
  std::string pred, ref, rig, sheet, records, out;
};

std::vector<std::pair<std::string, face::BlendshapeClip>> read_clip_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: '" + dir + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, face::BlendshapeClip>> clips;
  for (const auto& f : files) {
    std::istringstream in(io::read_file(f.string()));
    try {
      clips.emplace_back(f.filename().string(), io::read_clip(in));
    } catch (const FormatError& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
  }
  if (clips.empty()) throw FormatError("no .csv clips in '" + dir + "'");
  return clips;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(io::read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

io::MetricReport eval_report(const EvalArgs& a) {
  auto need = [](const std::string& v, const char* flag) {
    if (v.empty()) throw ArgumentError(std::string("this metric needs ") + flag);
  };
  if (a.metric == "lve") {
    need(a.pred, "--pred");
    need(a.ref, "--ref");
    const auto pred = read_clip_dir(a.pred);
    const auto ref = read_clip_dir(a.ref);
    if (pred.size() != ref.size()) throw FormatError("prediction and reference directories hold different clips");
    std::vector<face::BlendshapeClip> p, r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i].first != ref[i].first) throw FormatError("clip '" + pred[i].first + "' has no reference");
      p.push_back(pred[i].second);
      r.push_back(ref[i].second);
    }
    evaluation::Rig rig;
    if (a.rig.empty()) {
      rig = evaluation::make_default_rig();
    } else {
      std::istringstream in(io::read_file(a.rig));
      rig = io::read_rig(in);
    }
    return {{"lve", evaluation::lve(p, r, rig)}, {"samples", static_cast<double>(p.size())}};
  }
  if (a.metric == "ab") {
    need(a.sheet, "--sheet");
    std::istringstream in(io::read_file(a.sheet));
    const auto s = evaluation::ab_aggregate(io::read_rating_sheet(in));
    return {{"win", s.win}, {"tie", s.tie}, {"overall", s.overall}, {"mmf", s.mmf}};
  }
  if (a.metric == "latency") {
    need(a.records, "--records");
    std::istringstream in(io::read_file(a.records));
    const auto s = evaluation::latency_metrics(io::read_latency(in));
    io::MetricReport r;
    if (s.rtf) r.emplace_back("rtf", *s.rtf);
    r.emplace_back("ttft", s.ttft);
    r.emplace_back("face_latency", s.face_latency);
    r.emplace_back("excluded", static_cast<double>(s.excluded));
    return r;
  }
  if (a.metric == "wer") {
    need(a.pred, "--pred");
    need(a.ref, "--ref");
    const auto hyp = read_lines(a.pred);
    const auto ref = read_lines(a.ref);
    if (hyp.size() != ref.size()) {
      throw FormatError("transcript files differ in line count (" + std::to_string(hyp.size()) + " vs " +
                        std::to_string(ref.size()) + ")");
    }
    std::size_t edits = 0, words = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const auto rw = evaluation::split_words(ref[i]);
      if (rw.empty()) throw FormatError("empty reference transcript", i + 1);
      edits += evaluation::edit_distance(rw, evaluation::split_words(hyp[i]));
      words += rw.size();
    }
    return {{"wer", static_cast<double>(edits) / static_cast<double>(words)},
            {"lines", static_cast<double>(ref.size())}};
  }
  throw ArgumentError("unknown metric '" + a.metric + "' (expected lve, ab, latency or wer)");
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto report = eval_report(a);
  std::ostringstream text;
  io::write_report(text, report);
  if (a.out.empty()) {
    out << text.str();
    return kOk;
  }
  io::write_file(a.out, text.str());
  KeyValues resolved{{"metric", a.metric}};
  for (const auto& [k, v] : {std::pair<const char*, const std::string&>{"pred", a.pred}, {"ref", a.ref},
                             {"rig", a.rig}, {"sheet", a.sheet}, {"records", a.records}}) {
    if (!v.empty()) resolved[k] = v;
  }
  io::write_kv_file(a.out + ".config.txt", resolved);
  return kOk;
}

// ---- verify -----------------------------------------------------------------

int cmd_verify(const std::string& suite, std::optional<std::uint64_t> seed_flag, std::size_t seeds,
               std::ostream& out) {
  verify::SuiteOptions opts;
  opts.seed = resolve_seed(seed_flag, 1);
  opts.seeds = seeds;
  std::size_t failed = 0;
  opts.on_result = [&](const verify::CheckResult& r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " (%.2fs)", r.seconds);
    out << (r.passed ? "PASS " : "FAIL ") << r.name << buf << ": " << r.detail << "\n" << std::flush;
    if (!r.passed) ++failed;
  };
  const auto results = verify::run_suite(verify::parse_suite(suite), opts);
  out << results.size() - failed << "/" << results.size() << " checks passed\n";
  if (failed > 0) throw VerificationFailure(std::to_string(failed) + " check(s) failed");
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint speech-unit and facial-animation generation at desk scale", "exomni"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Write a seeded synthetic corpus");
  gen->add_option("--seed", gd.seed, "Corpus seed (overrides EXOMNI_SEED)");
  gen->add_option("--out-dir", gd.out_dir, "Output directory")->required();
  gen->add_option("--sizes", gd.sizes, "One count for every kind, or asr,tts,face,s2s,t2t");
  gen->add_option("--config", gd.config, "key=value file with model keys");
  gen->add_option("--min-len", gd.min_len, "Shortest text length");
  gen->add_option("--max-len", gd.max_len, "Longest text length");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Run one training stage");
  train->add_option("--stage", tr.stage, "I, II, III or IV")->required();
  train->add_option("--config", tr.config, "key=value file with model and schedule keys");
  train->add_option("--data-dir", tr.data_dir, "Corpus directory")->required();
  train->add_option("--checkpoint-dir,--out-dir", tr.out_dir, "Checkpoint directory")->required();
  train->add_option("--init", tr.init, "Start from this checkpoint instead of the previous stage");
  train->add_flag("--resume", tr.resume, "Continue an interrupted run of this stage");
  train->add_flag("--from-scratch", tr.from_scratch, "Start stages II-IV from a fresh model");
  train->add_option("--seed", tr.seed, "Training seed (overrides EXOMNI_SEED)");
  train->add_option("--max-steps", tr.max_steps, "Cap on optimizer steps");
  train->add_option("--batch-size", tr.batch_size, "Samples per micro-batch");
  train->add_option("--epochs", tr.epochs, "Passes over the stage data");
  train->add_option("--grad-accum", tr.grad_accum, "Micro-batches per optimizer step");
  train->add_option("--warmup-ratio", tr.warmup_ratio, "Fraction of steps spent warming up");
  train->add_option("--lr-scale", tr.lr_scale, "Multiplier on every group learning rate");
  train->add_option("--stop-after", tr.stop_after, "Stop after this many steps of the stage");
  train->add_option("--save-every", tr.save_every, "Also checkpoint every N steps");

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "Generate units and a blendshape clip");
  generate->add_option("--checkpoint", ga.checkpoint, "Checkpoint file")->required();
  generate->add_option("--prompt-tokens", ga.prompt_tokens, "Prompt token ids, comma or space separated");
  generate->add_option("--units-file", ga.units_file, "Decode faces for these unit sequences only");
  generate->add_option("--out,--out-dir", ga.out_dir, "Output directory")->required();
  generate->add_option("--max-tokens", ga.max_tokens, "Response token limit");
  generate->add_option("--max-units", ga.max_units, "Unit limit");
  generate->add_option("--sample-seed", ga.sample_seed, "Sample instead of greedy decoding");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Compute an evaluation metric");
  eval->add_option("--metric", ea.metric, "lve, ab, latency or wer")->required();
  eval->add_option("--pred", ea.pred, "Predicted clip directory (lve) or hypothesis transcripts (wer)");
  eval->add_option("--ref", ea.ref, "Reference clip directory (lve) or reference transcripts (wer)");
  eval->add_option("--rig", ea.rig, "Rig JSON (lve; default: built-in seeded rig)");
  eval->add_option("--sheet", ea.sheet, "Rating sheet CSV (ab)");
  eval->add_option("--records", ea.records, "Latency CSV (latency)");
  eval->add_option("--out", ea.out, "Report CSV (default: stdout)");

  std::string suite = "all";
  std::optional<std::uint64_t> verify_seed;
  std::size_t verify_seeds = 3;
  auto* verify = app.add_subcommand("verify", "Run gradient checks and invariant suites");
  verify->add_option("--suite", suite, "gradients, invariants or all");
  verify->add_option("--seed", verify_seed, "First seed (overrides EXOMNI_SEED)");
  verify->add_option("--seeds", verify_seeds, "Number of seeds per gradient check");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "exomni: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (const char* op = std::getenv("EXOMNI_MUTATE"); op != nullptr && *op != '\0') {
      numerics::set_backward_mutation(op);
    }
    if (gen->parsed()) return cmd_gen_data(gd, out);
    if (train->parsed()) return cmd_train(tr, out);
    if (generate->parsed()) return cmd_generate(ga, out);
    if (eval->parsed()) return cmd_eval(ea, out);
    if (verify->parsed()) return cmd_verify(suite, verify_seed, verify_seeds, out);
  } catch (const VerificationFailure& e) {
    err << "exomni: " << e.what() << "\n";
    return kVerificationFailed;
  } catch (const FormatError& e) {
    err << "exomni: format error: " << e.what() << "\n";
    return kFormat;
  } catch (const IoError& e) {
    err << "exomni: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::invalid_argument& e) {
    err << "exomni: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "exomni: " << e.what() << "\n";
    return kIoFailure;
  }
  return kUsage;
}

}  // namespace exomni::cli
