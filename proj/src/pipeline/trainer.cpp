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

#include "exomni/pipeline/trainer.hpp"

#include <map>

#include "exomni/errors.hpp"
#include "exomni/objectives/losses.hpp"

namespace exomni::pipeline {

namespace {

using numerics::slice_rows;

constexpr std::uint64_t kOrderStream = 0x0d3e;
constexpr std::uint64_t kMixStream = 0x313c;

constexpr std::array<DataKind, 4> kMixture = {DataKind::kAsr, DataKind::kTts, DataKind::kS2s,
                                              DataKind::kT2t};

struct Flags {
  bool projector = false, reasoner = false, generator = false, face = false;

  static Flags from(ExOmniModel& m) {
    auto any = [&m](ParamGroup g) {
      for (const auto& np : m.group(g)) {
        if (np.param->trainable) return true;
      }
      return false;
    };
    return {any(ParamGroup::kSpeechProjector), any(ParamGroup::kReasoner),
            any(ParamGroup::kUnitGenerator), any(ParamGroup::kFaceDecoder)};
  }
};

// Forward (and, when scale != 0, backward) of one sample of each kind. Hidden
// states of frozen upstream modules are memoized per sample.
class SampleRunner {
 public:
  SampleRunner(ExOmniModel& m, const SyntheticCorpus& c) : m_(m), c_(c), f_(Flags::from(m)) {}

  double run(DataKind kind, std::size_t i, double scale) {
    switch (kind) {
      case DataKind::kAsr: return asr(c_.asr[i], scale);
      case DataKind::kTts: return tts(i, scale);
      case DataKind::kFace: return face(i, scale);
      case DataKind::kS2s: return s2s(c_.s2s[i], scale);
      case DataKind::kT2t: return t2t(c_.t2t[i], scale);
    }
    return 0.0;
  }

 private:
  // Reasoner pass over [Emb(task, prompt...) ; speech rows] teacher-forced on `text`.
  struct ReasonerPass {
    std::vector<std::size_t> prompt;
    semantic::SpeechProjector::Cache proj;
    bool has_speech = false;
    nn::PrefixDecoder::Pass pass;
  };

  ReasonerPass reasoner_pass(std::vector<std::size_t> prompt, const semantic::SpeechFeatures* speech,
                             const Tokens& text) const {
    ReasonerPass r;
    r.prompt = std::move(prompt);
    Tensor prefix = m_.reasoner.embed_tokens(r.prompt);
    if (speech) {
      r.has_speech = true;
      prefix = numerics::concat_rows(prefix, m_.projector.forward(*speech, &r.proj));
    }
    r.pass = m_.reasoner.decoder.teacher_force(prefix, text);
    return r;
  }

  void reasoner_backward(const ReasonerPass& r, double ce_scale, const Tensor* dh) {
    if (!f_.reasoner && !(f_.projector && r.has_speech)) return;
    const Tensor dprefix = m_.reasoner.decoder.backward(r.pass, ce_scale, dh);
    const std::size_t n = r.prompt.size();
    m_.reasoner.embed_backward(r.prompt, slice_rows(dprefix, 0, n));
    if (r.has_speech && f_.projector) {
      m_.projector.backward(r.proj, slice_rows(dprefix, n, dprefix.rows()));
    }
  }

  struct GeneratorPass {
    units::UnitGenerator::ConditionCache cond;
    nn::PrefixDecoder::Pass pass;
  };

  GeneratorPass generator_pass(const Tokens& text, const Tensor& h, const units::UnitSequence& u) const {
    GeneratorPass g;
    const Tensor conditioned = m_.generator.condition(semantic::TokenSequence{text}, h, &g.cond);
    g.pass = m_.generator.teacher_force(conditioned, u);
    return g;
  }

  // Returns dH.
  Tensor generator_backward(const GeneratorPass& g, double ce_scale, const Tensor* d_hidden) {
    const Tensor dcond = m_.generator.decoder.backward(g.pass, ce_scale, d_hidden);
    return m_.generator.condition_backward(g.cond, dcond);
  }

  // l_face of one clip; accumulates into the face decoder and returns d gen_hidden.
  double face_loss(const units::UnitSequence& u, const Tensor& gen_hidden,
                   const face::BlendshapeClip& target, double scale, Tensor* d_gen) {
    face::FaceDecoder::Cache cache;
    objectives::FaceBatch batch;
    batch.predicted.push_back(m_.face.decode(u, gen_hidden, &cache));
    batch.target.push_back(target);
    batch.valid_lengths.push_back(target.frames());
    const double loss = objectives::l_face(batch);
    if (scale != 0.0) {
      Tensor g = objectives::l_face_grad(batch)[0];
      numerics::scale_into(g, scale);
      Tensor dg = m_.face.backward(cache, g);
      if (d_gen) *d_gen = std::move(dg);
    }
    return loss;
  }

  double asr(const AsrSample& s, double scale) {
    const auto r = reasoner_pass({semantic::kAsrTaskToken}, &s.features, s.text);
    const double loss = m_.reasoner.decoder.loss(r.pass);
    if (scale != 0.0) reasoner_backward(r, scale, nullptr);
    return objectives::total_loss({{loss}}, std::nullopt);
  }

  double t2t(const T2tSample& s, double scale) {
    std::vector<std::size_t> prompt{semantic::kChatTaskToken};
    prompt.insert(prompt.end(), s.prompt.begin(), s.prompt.end());
    const auto r = reasoner_pass(std::move(prompt), nullptr, s.response);
    const double loss = m_.reasoner.decoder.loss(r.pass);
    if (scale != 0.0) reasoner_backward(r, scale, nullptr);
    return objectives::total_loss({{loss}}, std::nullopt);
  }

  // Reasoner hidden states for a TTS-style prompt; memoized while frozen.
  Tensor tts_hidden(std::map<std::size_t, Tensor>& memo, std::size_t i, const Tokens& text,
                    std::optional<ReasonerPass>& live) {
    if (!f_.reasoner) {
      auto it = memo.find(i);
      if (it != memo.end()) return it->second;
      const Tensor h = reasoner_pass({semantic::kTtsTaskToken}, nullptr, text).pass.token_hidden();
      memo.emplace(i, h);
      return h;
    }
    live = reasoner_pass({semantic::kTtsTaskToken}, nullptr, text);
    return live->pass.token_hidden();
  }

  double tts(std::size_t i, double scale) {
    const TtsSample& s = c_.tts[i];
    std::optional<ReasonerPass> r;
    const Tensor h = tts_hidden(tts_memo_, i, s.text, r);
    const auto g = generator_pass(s.text, h, s.units);
    const double loss = m_.generator.decoder.loss(g.pass);
    if (scale != 0.0 && (f_.generator || f_.reasoner)) {
      const Tensor dh = generator_backward(g, scale, nullptr);
      if (r) reasoner_backward(*r, 0.0, &dh);
    }
    return objectives::total_loss({{loss}}, std::nullopt);
  }

  double face(std::size_t i, double scale) {
    const FaceSample& s = c_.face[i];
    if (!f_.reasoner && !f_.generator) {
      auto it = face_memo_.find(i);
      if (it == face_memo_.end()) {
        std::optional<ReasonerPass> r;
        const Tensor h = tts_hidden(face_h_memo_, i, s.text, r);
        it = face_memo_.emplace(i, generator_pass(s.text, h, s.units).pass.token_hidden()).first;
      }
      const double loss = face_loss(s.units, it->second, s.clip, f_.face ? scale : 0.0, nullptr);
      return objectives::total_loss({}, loss);
    }
    std::optional<ReasonerPass> r;
    const Tensor h = tts_hidden(face_h_memo_, i, s.text, r);
    const auto g = generator_pass(s.text, h, s.units);
    Tensor d_gen;
    const double loss = face_loss(s.units, g.pass.token_hidden(), s.clip, scale, &d_gen);
    if (scale != 0.0) {
      const Tensor dh = generator_backward(g, 0.0, &d_gen);
      if (r) reasoner_backward(*r, 0.0, &dh);
    }
    return objectives::total_loss({}, loss);
  }

  double s2s(const S2sSample& s, double scale) {
    const auto r = reasoner_pass({semantic::kChatTaskToken}, &s.question, s.response);
    const double text_ce = m_.reasoner.decoder.loss(r.pass);
    const auto g = generator_pass(s.response, r.pass.token_hidden(), s.units);
    const double unit_ce = m_.generator.decoder.loss(g.pass);
    Tensor d_gen;
    const double lface = face_loss(s.units, g.pass.token_hidden(), s.clip, scale, &d_gen);
    if (scale != 0.0) {
      const Tensor dh = generator_backward(g, scale, &d_gen);
      reasoner_backward(r, scale, &dh);
    }
    return objectives::total_loss({{text_ce}, {unit_ce}}, lface);
  }

  ExOmniModel& m_;
  const SyntheticCorpus& c_;
  Flags f_;
  std::map<std::size_t, Tensor> tts_memo_, face_h_memo_, face_memo_;
};

// Infinite stream of per-epoch permutations of one data kind.
class OrderStream {
 public:
  OrderStream(std::uint64_t seed, Stage stage, DataKind kind, std::size_t n)
      : seed_(seed), stage_(stage), kind_(kind), n_(n) {}

  std::size_t at(std::size_t pos) {
    const std::size_t epoch = pos / n_;
    auto it = perms_.find(epoch);
    if (it == perms_.end()) {
      numerics::Rng rng(numerics::derive_seed(
          seed_, kOrderStream + 16 * static_cast<std::uint64_t>(stage_) + static_cast<std::uint64_t>(kind_),
          epoch));
      std::vector<std::size_t> p(n_);
      for (std::size_t i = 0; i < n_; ++i) p[i] = i;
      for (std::size_t i = n_; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
      if (perms_.size() > 4) perms_.erase(perms_.begin());
      it = perms_.emplace(epoch, std::move(p)).first;
    }
    return it->second[pos % n_];
  }

 private:
  std::uint64_t seed_;
  Stage stage_;
  DataKind kind_;
  std::size_t n_;
  std::map<std::size_t, std::vector<std::size_t>> perms_;
};

DataKind step_kind(Stage stage, std::uint64_t seed, std::size_t step) {
  if (stage != Stage::kIV) return stage_kinds(stage).front();
  numerics::Rng rng(numerics::derive_seed(seed, kMixStream + static_cast<std::uint64_t>(stage), step));
  return kMixture[rng.below(kMixture.size())];
}

void require_kinds(Stage stage, const SyntheticCorpus& corpus) {
  for (DataKind k : stage_kinds(stage)) {
    if (corpus.count(k) == 0) {
      throw ConfigError("stage " + stage_name(stage) + " needs " + kind_name(k) +
                        " samples but the corpus has none");
    }
  }
}

ParamGroup group_of(const std::string& name) {
  const std::string head = name.substr(0, name.find('.'));
  if (head == "projector") return ParamGroup::kSpeechProjector;
  if (head == "reasoner") return ParamGroup::kReasoner;
  if (head == "generator") return ParamGroup::kUnitGenerator;
  if (head == "face") return ParamGroup::kFaceDecoder;
  throw ArgumentError("parameter '" + name + "' belongs to no group");
}

}  // namespace

std::vector<DataKind> stage_kinds(Stage s) {
  switch (s) {
    case Stage::kI: return {DataKind::kAsr};
    case Stage::kII: return {DataKind::kTts};
    case Stage::kIII: return {DataKind::kFace};
    case Stage::kIV: return {kMixture.begin(), kMixture.end()};
  }
  return {};
}

std::size_t total_steps(const StagePlan& plan, const SyntheticCorpus& corpus) {
  std::size_t n = 0;
  for (DataKind k : stage_kinds(plan.stage)) n += corpus.count(k);
  const std::size_t per_step = plan.batch_size * plan.grad_accum;
  std::size_t steps = (plan.epochs * n + per_step - 1) / per_step;
  if (plan.max_steps > 0) steps = std::min(steps, plan.max_steps);
  return steps;
}

TrainReport train_stage(ExOmniModel& model, const StagePlan& plan, const SyntheticCorpus& corpus,
                        TrainState& state, const TrainOptions& opts) {
  require_kinds(plan.stage, corpus);
  const std::size_t total = total_steps(plan, corpus);
  if (state.stage != plan.stage || state.complete || state.step == 0) {
    state.stage = plan.stage;
    state.step = 0;
    state.complete = false;
    state.optimizer.reset();
  } else if (state.total_steps != total) {
    throw ConfigError("stage " + stage_name(plan.stage) + ": resumed state expects " +
                      std::to_string(state.total_steps) + " steps, plan gives " + std::to_string(total));
  }
  state.total_steps = total;
  model.apply_plan(plan);

  const ParameterList params = model.all();
  SampleRunner runner(model, corpus);
  std::map<DataKind, OrderStream> orders;
  std::map<DataKind, std::size_t> consumed;
  for (DataKind k : stage_kinds(plan.stage)) {
    orders.emplace(k, OrderStream(state.seed, plan.stage, k, corpus.count(k)));
    consumed[k] = 0;
  }
  const std::size_t per_step = plan.batch_size * plan.grad_accum;
  for (std::size_t s = 1; s <= state.step; ++s) consumed[step_kind(plan.stage, state.seed, s)] += per_step;

  TrainReport report;
  const double scale = 1.0 / static_cast<double>(per_step);
  while (state.step < total) {
    if (opts.stop_after > 0 && state.step >= opts.stop_after) break;
    const std::size_t step = state.step + 1;
    const DataKind kind = step_kind(plan.stage, state.seed, step);
    numerics::zero_grads(params);
    double loss_sum = 0.0;
    OrderStream& order = orders.at(kind);
    std::size_t& pos = consumed[kind];
    for (std::size_t j = 0; j < per_step; ++j) loss_sum += runner.run(kind, order.at(pos++), scale);

    const double factor = warmup_lr(1.0, step, plan.warmup_ratio, total);
    state.optimizer.step(params, step, [&](const std::string& name) {
      return factor * plan.group(group_of(name)).lr;
    });
    state.step = step;
    StepRecord rec{step, kind, loss_sum / static_cast<double>(per_step), factor};
    if (opts.on_step) opts.on_step(rec);
    report.steps.push_back(rec);
  }
  state.complete = state.step >= total;
  return report;
}

double evaluate_loss(ExOmniModel& model, DataKind kind, const SyntheticCorpus& corpus,
                     std::size_t max_samples) {
  std::size_t n = corpus.count(kind);
  if (max_samples > 0) n = std::min(n, max_samples);
  if (n == 0) throw ArgumentError("evaluate_loss: corpus has no " + kind_name(kind) + " samples");
  SampleRunner runner(model, corpus);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += runner.run(kind, i, 0.0);
  return sum / static_cast<double>(n);
}

double sample_loss(ExOmniModel& model, const SyntheticCorpus& corpus, DataKind kind,
                   std::size_t index, double scale) {
  if (index >= corpus.count(kind)) {
    throw IndexError("sample " + std::to_string(index) + " outside the " + kind_name(kind) + " split");
  }
  SampleRunner runner(model, corpus);
  return runner.run(kind, index, scale);
}

GenerationResult generate(const ExOmniModel& model, const Tokens& prompt,
                          const std::optional<semantic::SpeechFeatures>& speech,
                          std::size_t max_tokens, std::size_t max_units,
                          const nn::DecodeOptions& decode) {
  std::vector<std::size_t> ids{semantic::kChatTaskToken};
  ids.insert(ids.end(), prompt.begin(), prompt.end());
  std::optional<Tensor> speech_rows;
  if (speech) speech_rows = semantic::project_speech(*speech, model.projector);
  const Tensor x = semantic::build_unified_input(semantic::TokenSequence{ids}, speech_rows, model.reasoner);
  const auto reasoned = semantic::reason(x, model.reasoner, max_tokens, decode);

  nn::DecodeOptions unit_decode = decode;
  unit_decode.seed = numerics::derive_seed(decode.seed, 1);
  const Tensor conditioned = model.generator.condition(reasoned.tokens, reasoned.hidden);
  GenerationResult out;
  out.response = reasoned.tokens.ids;
  out.trace = model.generator.generate_units(conditioned, max_units, unit_decode);
  out.clip = model.face.decode(out.trace.units, out.trace.hidden);
  return out;
}

face::BlendshapeClip face_from_units(const ExOmniModel& model, const units::UnitSequence& u) {
  const Tensor zeros = Tensor::matrix(u.units.size(), model.config().d_model);
  return model.face.decode(u, zeros);
}

}  // namespace exomni::pipeline
