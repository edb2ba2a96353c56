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

#include "exomni/pipeline/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "exomni/errors.hpp"

namespace exomni::pipeline {

namespace {

constexpr char kMagic[4] = {'E', 'X', 'C', 'K'};
constexpr std::uint64_t kMaxCount = 1ull << 32;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    uint<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  void tensor_values(const Tensor& t) {
    for (double v : t.data()) f64(v);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }
  template <typename T>
  T uint(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(uint<std::uint64_t>(what)); }
  std::string str(const char* what) {
    const auto n = uint<std::uint64_t>(what);
    need(n, what);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n, const char* what) {
    need(n, what);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor tensor(const std::vector<std::size_t>& shape, const char* what) {
    Tensor t(shape);
    need(t.size() * 8, what);
    for (double& v : t.data()) v = f64(what);
    return t;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

std::string config_text(const Checkpoint& c) {
  std::string out;
  for (const auto& [k, v] : c.config.to_kv()) out += k + "=" + v + "\n";
  return out;
}

ModelConfig parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint config: missing '='", line_no);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  try {
    ModelConfig cfg = ModelConfig::take_from(kv);
    if (!kv.empty()) throw FormatError("checkpoint config: unknown key " + kv.begin()->first);
    return cfg;
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
}

}  // namespace

Checkpoint capture(ExOmniModel& model, const TrainState& state) {
  Checkpoint c;
  c.config = model.config();
  c.stage = state.stage;
  c.step = state.step;
  c.total_steps = state.total_steps;
  c.complete = state.complete;
  c.seed = state.seed;
  const auto& moments = state.optimizer.moments();
  for (const auto& [name, p] : model.all()) {
    ParamBlock b{name, p->value, std::nullopt};
    if (auto it = moments.find(name); it != moments.end()) b.moments = it->second;
    c.blocks.push_back(std::move(b));
  }
  return c;
}

void restore(const Checkpoint& c, ExOmniModel& model, TrainState& state) {
  if (c.config.to_kv() != model.config().to_kv()) {
    throw ConfigError("checkpoint was written for a different model configuration");
  }
  const ParameterList params = model.all();
  if (params.size() != c.blocks.size()) {
    throw FormatError("checkpoint has " + std::to_string(c.blocks.size()) + " parameter blocks, model has " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& b = c.blocks[i];
    if (b.name != params[i].name || !b.value.same_shape(params[i].param->value)) {
      throw FormatError("checkpoint block " + b.name + " " + b.value.shape_string() +
                        " does not match model parameter " + params[i].name + " " +
                        params[i].param->value.shape_string());
    }
  }
  std::map<std::string, Moments> moments;
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].param->value = c.blocks[i].value;
    params[i].param->zero_grad();
    if (c.blocks[i].moments) moments[c.blocks[i].name] = *c.blocks[i].moments;
  }
  state.stage = c.stage;
  state.step = c.step;
  state.total_steps = c.total_steps;
  state.complete = c.complete;
  state.seed = c.seed;
  state.optimizer.moments() = std::move(moments);
}

std::string encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.str(config_text(c));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(c.stage));
  w.uint<std::uint64_t>(c.step);
  w.uint<std::uint64_t>(c.total_steps);
  w.uint<std::uint8_t>(c.complete ? 1 : 0);
  w.uint<std::uint64_t>(c.seed);
  w.uint<std::uint64_t>(c.blocks.size());
  for (const auto& b : c.blocks) {
    w.str(b.name);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(b.value.rank()));
    for (std::size_t d : b.value.shape()) w.uint<std::uint64_t>(d);
    w.tensor_values(b.value);
    w.uint<std::uint8_t>(b.moments ? 1 : 0);
    if (b.moments) {
      w.tensor_values(b.moments->m);
      w.tensor_values(b.moments->v);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(4, "magic") != std::string(kMagic, 4)) throw FormatError("not a checkpoint: bad magic");
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.config = parse_config_text(r.str("config"));
  const auto stage = r.uint<std::uint32_t>("stage");
  if (stage < 1 || stage > 4) throw FormatError("checkpoint stage out of range");
  c.stage = static_cast<Stage>(stage);
  c.step = r.uint<std::uint64_t>("step");
  c.total_steps = r.uint<std::uint64_t>("total steps");
  const auto complete = r.uint<std::uint8_t>("completion flag");
  if (complete > 1) throw FormatError("checkpoint completion flag must be 0 or 1");
  c.complete = complete == 1;
  c.seed = r.uint<std::uint64_t>("seed");
  const auto count = r.uint<std::uint64_t>("block count");
  if (count > kMaxCount) throw FormatError("checkpoint block count is implausible");
  for (std::uint64_t i = 0; i < count; ++i) {
    ParamBlock b;
    b.name = r.str("block name");
    const auto rank = r.uint<std::uint32_t>("block rank");
    if (rank < 1 || rank > 4) throw FormatError("checkpoint block " + b.name + " has rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    std::uint64_t elems = 1;
    for (auto& d : shape) {
      d = r.uint<std::uint64_t>("block shape");
      if (d == 0 || d > kMaxCount) throw FormatError("checkpoint block " + b.name + " has a bad dimension");
      elems *= d;
      if (elems > kMaxCount) throw FormatError("checkpoint block " + b.name + " is implausibly large");
    }
    b.value = r.tensor(shape, "block values");
    const auto has_moments = r.uint<std::uint8_t>("moment flag");
    if (has_moments > 1) throw FormatError("checkpoint moment flag must be 0 or 1");
    if (has_moments) {
      Moments m;
      m.m = r.tensor(shape, "first moments");
      m.v = r.tensor(shape, "second moments");
      b.moments = std::move(m);
    }
    c.blocks.push_back(std::move(b));
  }
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace exomni::pipeline
