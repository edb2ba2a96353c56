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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "exomni/errors.hpp"
#include "exomni/face/decoder.hpp"
#include "exomni/fusion/fusion.hpp"
#include "exomni/nn/layers.hpp"
#include "exomni/numerics/gradcheck.hpp"
#include "exomni/objectives/losses.hpp"
#include "exomni/pipeline/trainer.hpp"
#include "exomni/verify/suite.hpp"

namespace exomni::verify {

namespace {

using numerics::finite_diff_check;
using numerics::Parameter;
using numerics::ParameterList;
using numerics::Rng;
using numerics::Tensor;

// Larger than the training init so every gradient entry is well above the
// finite-difference noise floor.
constexpr double kInitStd = 0.4;

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double sd = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = sd * rng.normal();
  return t;
}

double weighted_sum(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

void randomize_norms(ParameterList& params, Rng& rng) {
  for (auto& np : params) {
    const auto& n = np.name;
    const bool gamma = n.size() >= 6 && n.compare(n.size() - 6, 6, ".gamma") == 0;
    const bool beta = n.size() >= 5 && n.compare(n.size() - 5, 5, ".beta") == 0;
    const bool bias = n.size() >= 5 && n.compare(n.size() - 5, 5, ".bias") == 0;
    for (double& v : np.param->value.data()) {
      if (gamma) v = 1.0 + 0.2 * rng.normal();
      if (beta || bias) v = 0.2 * rng.normal();
    }
  }
}

CheckResult from_report(const std::string& name, const numerics::GradCheckReport& r) {
  CheckResult c;
  c.name = name;
  c.passed = r.passed();
  std::size_t elems = 0;
  for (const auto& e : r.entries) elems += e.elements_checked;
  char buf[96];
  std::snprintf(buf, sizeof buf, "max rel err %.3e over %zu elements", r.max_rel_error(), elems);
  c.detail = buf;
  for (const auto& e : r.entries) {
    if (!(e.max_rel_error < r.tolerance)) {
      c.detail += "; worst at " + e.name;
      break;
    }
  }
  return c;
}

// ---- primitives ------------------------------------------------------------

CheckResult linear_ce(std::uint64_t seed) {
  Rng rng(seed);
  Parameter x(random_tensor({3, 4}, rng));
  Parameter w(random_tensor({4, 5}, rng));
  Parameter b(random_tensor({5}, rng));
  const std::vector<std::size_t> targets{1, 4, 0};
  const std::vector<bool> mask{true, false, true};
  auto f = [&] {
    const Tensor logits = numerics::linear(x.value, w, &b);
    const double loss = numerics::cross_entropy(logits, targets, mask);
    x.accumulate(numerics::linear_backward(x.value, w, &b,
                                           numerics::cross_entropy_backward(logits, targets, mask)));
    return loss;
  };
  return from_report("linear + cross_entropy", finite_diff_check(f, {{"x", &x}, {"w", &w}, {"b", &b}}));
}

CheckResult layer_norm_check(std::uint64_t seed) {
  Rng rng(seed);
  Parameter x(random_tensor({3, 6}, rng));
  Parameter gamma(random_tensor({6}, rng));
  Parameter beta(random_tensor({6}, rng));
  const Tensor c = random_tensor({3, 6}, rng);
  auto f = [&] {
    numerics::LayerNormCache cache;
    const Tensor y = numerics::layer_norm(x.value, gamma, beta, numerics::kLayerNormEps, &cache);
    x.accumulate(numerics::layer_norm_backward(cache, gamma, beta, c));
    return weighted_sum(y, c);
  };
  return from_report("layer_norm", finite_diff_check(f, {{"x", &x}, {"gamma", &gamma}, {"beta", &beta}}));
}

CheckResult activations(std::uint64_t seed) {
  Rng rng(seed);
  Parameter x(random_tensor({4, 5}, rng));
  Tensor c[4];
  for (auto& t : c) t = random_tensor({4, 5}, rng);
  auto f = [&] {
    const Tensor g = numerics::gelu(x.value);
    const Tensor r = numerics::relu(x.value);
    const Tensor s = numerics::sigmoid(x.value);
    const Tensor p = numerics::softmax(x.value);
    Tensor dx = numerics::gelu_backward(x.value, c[0]);
    numerics::add_into(dx, numerics::relu_backward(x.value, c[1]));
    numerics::add_into(dx, numerics::sigmoid_backward(s, c[2]));
    numerics::add_into(dx, numerics::softmax_backward(p, c[3]));
    x.accumulate(dx);
    return weighted_sum(g, c[0]) + weighted_sum(r, c[1]) + weighted_sum(s, c[2]) + weighted_sum(p, c[3]);
  };
  return from_report("gelu / relu / sigmoid / softmax", finite_diff_check(f, {{"x", &x}}));
}

CheckResult attention_check(std::uint64_t seed) {
  Rng rng(seed);
  Parameter q(random_tensor({3, 4}, rng)), k(random_tensor({5, 4}, rng)), v(random_tensor({5, 3}, rng));
  const Tensor c = random_tensor({3, 3}, rng);
  auto f = [&] {
    numerics::AttentionCache cache;
    const Tensor y = numerics::scaled_dot_attention(q.value, k.value, v.value, /*causal=*/true, &cache);
    auto g = numerics::scaled_dot_attention_backward(q.value, k.value, v.value, cache, c);
    q.accumulate(g.dq);
    k.accumulate(g.dk);
    v.accumulate(g.dv);
    return weighted_sum(y, c);
  };
  return from_report("scaled dot attention (causal)", finite_diff_check(f, {{"q", &q}, {"k", &k}, {"v", &v}}));
}

CheckResult transformer_check(std::uint64_t seed) {
  Rng rng(seed);
  nn::AttentionSpec spec{8, 2, /*causal=*/true, /*rope=*/true, 10000.0};
  nn::TransformerBlock block(spec, rng, kInitStd);
  Parameter x(random_tensor({5, 8}, rng));
  const Tensor c = random_tensor({5, 8}, rng);
  const auto pos = positional::linear_positions(5, 3);
  ParameterList params{{"x", &x}};
  block.collect(params, "block");
  randomize_norms(params, rng);
  auto f = [&] {
    nn::TransformerBlock::Cache cache;
    const Tensor y = block.forward(x.value, pos, &cache);
    x.accumulate(block.backward(cache, pos, c));
    return weighted_sum(y, c);
  };
  return from_report("transformer block (rope, causal)", finite_diff_check(f, params));
}

// ---- fusion ----------------------------------------------------------------

CheckResult fusion_check(std::uint64_t seed) {
  Rng rng(seed);
  fusion::FusionConfig cfg;
  cfg.d_model = 8;
  cfg.d_context = 6;
  cfg.heads = 2;
  fusion::FusionStack stack(2, cfg, rng, kInitStd);
  Parameter q(random_tensor({4, 8}, rng)), ctx(random_tensor({3, 6}, rng));
  const Tensor c = random_tensor({4, 8}, rng);
  ParameterList params{{"q", &q}, {"context", &ctx}};
  stack.collect(params, "fusion");
  randomize_norms(params, rng);
  auto f = [&] {
    fusion::FusionStack::Cache cache;
    const Tensor y = stack.forward(q.value, ctx.value, &cache);
    auto g = stack.backward(cache, c);
    q.accumulate(g.dq);
    ctx.accumulate(g.dc);
    return weighted_sum(y, c);
  };
  return from_report("gated fusion stack", finite_diff_check(f, params));
}

// ---- modules through the model --------------------------------------------

pipeline::ModelConfig tiny_config() {
  pipeline::ModelConfig m;
  m.d_enc = 4;
  m.d_model = 8;
  m.text_vocab = 16;
  m.unit_vocab = 10;
  m.heads = 2;
  m.reasoner_layers = 1;
  m.generator_layers = 1;
  m.fusion_depth = 2;
  m.face_encoder_layers = 1;
  m.init_std = kInitStd;
  return m;
}

pipeline::SyntheticCorpus tiny_corpus(std::uint64_t seed) {
  pipeline::CorpusSizes sizes{1, 1, 1, 1, 1, 3, 4};
  pipeline::CorpusShape shape;
  shape.text_vocab = 16;
  shape.unit_vocab = 10;
  shape.d_enc = 4;
  return pipeline::generate_corpus(seed, sizes, shape);
}

// Replaces the face-only targets with the model's own prediction plus a small
// offset. l_face then sits near its minimum, where its value, and with it the
// rounding noise of the finite differences, is small next to the gradient
// entries. The speech-to-speech targets are left alone: there the text and
// unit terms dominate the loss value, so the face term keeps a full residual.
void retarget_faces(const pipeline::ExOmniModel& model, pipeline::SyntheticCorpus& corpus, Rng& rng) {
  const std::vector<std::size_t> tts_task{semantic::kTtsTaskToken};
  for (auto& s : corpus.face) {
    const Tensor prefix = model.reasoner.embed_tokens(tts_task);
    const Tensor h = model.reasoner.decoder.teacher_force(prefix, s.text).token_hidden();
    const Tensor cond = model.generator.condition(semantic::TokenSequence{s.text}, h);
    face::BlendshapeClip target = model.face.decode(s.units, model.generator.teacher_force(cond, s.units).token_hidden());
    for (double& v : target.coeffs.data()) v = std::clamp(v + 0.01 * rng.normal(), 0.0, 1.0);
    s.clip = std::move(target);
  }
}

CheckResult model_check(std::uint64_t seed, pipeline::DataKind kind, pipeline::ParamGroup group,
                        const std::string& name) {
  pipeline::ExOmniModel model(tiny_config(), seed);
  auto corpus = tiny_corpus(seed);
  Rng rng(numerics::derive_seed(seed, 99));
  ParameterList all = model.all();
  randomize_norms(all, rng);
  retarget_faces(model, corpus, rng);
  numerics::set_trainable(all, true);
  auto f = [&] { return pipeline::sample_loss(model, corpus, kind, 0, 1.0); };
  ParameterList params = name.rfind("end-to-end", 0) == 0 ? all : model.group(group);
  return from_report(name, finite_diff_check(f, params));
}

struct Check {
  std::string name;
  std::function<CheckResult(std::uint64_t)> run;
};

std::vector<Check> checks() {
  using pipeline::DataKind;
  using pipeline::ParamGroup;
  return {
      {"linear", linear_ce},
      {"layer_norm", layer_norm_check},
      {"activations", activations},
      {"attention", attention_check},
      {"transformer", transformer_check},
      {"fusion", fusion_check},
      {"projector+reasoner",
       [](std::uint64_t s) {
         return model_check(s, DataKind::kAsr, ParamGroup::kSpeechProjector, "speech projector (ASR loss)");
       }},
      {"reasoner",
       [](std::uint64_t s) { return model_check(s, DataKind::kT2t, ParamGroup::kReasoner, "reasoner (text loss)"); }},
      {"generator",
       [](std::uint64_t s) {
         return model_check(s, DataKind::kTts, ParamGroup::kUnitGenerator, "unit generator (unit NLL)");
       }},
      {"face",
       [](std::uint64_t s) { return model_check(s, DataKind::kFace, ParamGroup::kFaceDecoder, "face decoder (l_face)"); }},
      {"e2e-face",
       [](std::uint64_t s) {
         return model_check(s, DataKind::kFace, ParamGroup::kFaceDecoder, "end-to-end l_face through all modules");
       }},
      {"e2e-s2s",
       [](std::uint64_t s) {
         return model_check(s, DataKind::kS2s, ParamGroup::kFaceDecoder, "end-to-end speech-to-speech total loss");
       }},
  };
}

}  // namespace

std::vector<CheckResult> gradient_checks(const SuiteOptions& opts) {
  std::vector<CheckResult> out;
  for (const auto& check : checks()) {
    for (std::size_t i = 0; i < opts.seeds; ++i) {
      const std::uint64_t seed = opts.seed + i;
      const auto t0 = std::chrono::steady_clock::now();
      CheckResult r;
      try {
        r = check.run(seed);
      } catch (const std::exception& e) {
        r.name = check.name;
        r.passed = false;
        r.detail = e.what();
      }
      r.name = "gradient: " + r.name + " [seed " + std::to_string(seed) + "]";
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (opts.on_result) opts.on_result(r);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace exomni::verify
