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

#include "exomni/io/formats.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "exomni/errors.hpp"
#include "json.hpp"

namespace exomni::io {

namespace fs = std::filesystem;
using numerics::Tensor;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::size_t to_size(const std::string& s, std::size_t line, const char* what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(std::string("expected a non-negative integer ") + what + ", got '" + s + "'", line);
  }
  return v;
}

double to_double(const std::string& s, std::size_t line, const char* what) {
  if (s.empty()) throw FormatError(std::string("empty ") + what, line);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw FormatError(std::string("expected a number for ") + what + ", got '" + s + "'", line);
  }
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace

// ---- key=value -------------------------------------------------------------

KeyValues parse_kv(std::istream& in) {
  KeyValues kv;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = strip_cr(line);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("expected key=value", line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("empty key", line_no);
    if (kv.count(key)) throw FormatError("duplicate key " + key, line_no);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_kv(std::ostream& out, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

KeyValues read_kv_file(const std::string& path) {
  auto in = open_in(path);
  return parse_kv(in);
}

void write_kv_file(const std::string& path, const KeyValues& kv) {
  auto out = open_out(path);
  write_kv(out, kv);
}

// ---- units -----------------------------------------------------------------

std::vector<UnitsRecord> read_units(std::istream& in) {
  std::vector<UnitsRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::istringstream ls(strip_cr(line));
    UnitsRecord r;
    if (!(ls >> r.id)) continue;
    for (std::string tok; ls >> tok;) r.units.push_back(to_size(tok, line_no, "unit id"));
    if (r.units.empty()) throw FormatError("sequence " + r.id + " has no units", line_no);
    out.push_back(std::move(r));
  }
  return out;
}

void write_units(std::ostream& out, const std::vector<UnitsRecord>& records) {
  for (const auto& r : records) {
    out << r.id;
    for (std::size_t u : r.units) out << ' ' << u;
    out << '\n';
  }
}

// ---- clip CSV --------------------------------------------------------------

namespace {

std::string clip_header() {
  std::string h = "frame,time_sec";
  for (auto name : face::kArkitNames) {
    h += ',';
    h += name;
  }
  return h;
}

}  // namespace

face::BlendshapeClip read_clip(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError("empty clip file", line_no);
  line = strip_cr(line);
  const std::string prefix = "# fps=";
  if (line.rfind(prefix, 0) != 0) throw FormatError("clip must start with '# fps=<rate>'", line_no);
  face::BlendshapeClip clip;
  clip.fps = to_double(line.substr(prefix.size()), line_no, "fps");
  if (!(clip.fps > 0.0)) throw FormatError("clip fps must be positive", line_no);
  ++line_no;
  if (!std::getline(in, line) || strip_cr(line) != clip_header()) {
    throw FormatError("clip header must be frame,time_sec,<52 ARKit names>", line_no);
  }
  std::vector<double> values;
  std::size_t frames = 0;
  for (; std::getline(in, line);) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2 + face::kBlendshapeCount) {
      throw FormatError("clip row has " + std::to_string(cells.size()) + " columns, expected 54", line_no);
    }
    if (to_size(cells[0], line_no, "frame index") != frames) {
      throw FormatError("clip frames must be numbered 0, 1, 2, ...", line_no);
    }
    to_double(cells[1], line_no, "time_sec");
    for (std::size_t k = 0; k < face::kBlendshapeCount; ++k) {
      const double v = to_double(cells[2 + k], line_no, "coefficient");
      if (!(v >= 0.0 && v <= 1.0)) throw FormatError("coefficient outside [0, 1]", line_no);
      values.push_back(v);
    }
    ++frames;
  }
  if (frames == 0) throw FormatError("clip has no frames", line_no);
  clip.coeffs = Tensor({frames, face::kBlendshapeCount}, std::move(values));
  return clip;
}

void write_clip(std::ostream& out, const face::BlendshapeClip& clip) {
  clip.validate();
  out << "# fps=" << fmt("%.9g", clip.fps) << '\n' << clip_header() << '\n';
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    out << t << ',' << fmt("%.9g", static_cast<double>(t) / clip.fps);
    for (double v : clip.coeffs.row(t)) out << ',' << fmt("%.9g", v);
    out << '\n';
  }
}

// ---- rig JSON --------------------------------------------------------------

namespace {

Tensor matrix_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw FormatError(std::string("rig: ") + what + " must be a non-empty array");
  const std::size_t rows = j.size();
  Tensor t = Tensor::matrix(rows, 3);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != 3) throw FormatError(std::string("rig: ") + what + " rows must have 3 values");
    for (std::size_t c = 0; c < 3; ++c) {
      if (!row[c].is_number()) throw FormatError(std::string("rig: ") + what + " holds a non-number");
      t(r, c) = row[c].get<double>();
    }
  }
  return t;
}

nlohmann::json matrix_to_json(const Tensor& t) {
  auto j = nlohmann::json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    j.push_back(nlohmann::json::array({row[0], row[1], row[2]}));
  }
  return j;
}

}  // namespace

evaluation::Rig read_rig(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("rig JSON: ") + e.what());
  }
  for (const char* key : {"base", "deltas", "lip_indices"}) {
    if (!j.contains(key)) throw FormatError(std::string("rig JSON: missing key ") + key);
  }
  evaluation::Rig rig;
  rig.base = matrix_from_json(j["base"], "base");
  if (!j["deltas"].is_array()) throw FormatError("rig JSON: deltas must be an array");
  for (const auto& d : j["deltas"]) rig.deltas.push_back(matrix_from_json(d, "delta"));
  if (!j["lip_indices"].is_array()) throw FormatError("rig JSON: lip_indices must be an array");
  for (const auto& i : j["lip_indices"]) {
    if (!i.is_number_unsigned()) throw FormatError("rig JSON: lip indices must be non-negative integers");
    rig.lip_indices.push_back(i.get<std::size_t>());
  }
  try {
    rig.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
  return rig;
}

void write_rig(std::ostream& out, const evaluation::Rig& rig) {
  rig.validate();
  nlohmann::json j;
  j["base"] = matrix_to_json(rig.base);
  j["deltas"] = nlohmann::json::array();
  for (const auto& d : rig.deltas) j["deltas"].push_back(matrix_to_json(d));
  j["lip_indices"] = rig.lip_indices;
  out << j.dump() << '\n';
}

// ---- rating sheet ----------------------------------------------------------

evaluation::RatingSheet read_rating_sheet(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || strip_cr(line) != "pair_id,rater_id,label") {
    throw FormatError("rating sheet header must be pair_id,rater_id,label", line_no);
  }
  std::vector<std::string> pair_order;
  std::map<std::string, std::map<std::string, evaluation::Preference>> by_pair;
  std::map<std::string, bool> raters;
  for (; std::getline(in, line);) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw FormatError("rating row needs 3 columns", line_no);
    evaluation::Preference p;
    if (cells[2] == "A") p = evaluation::Preference::kA;
    else if (cells[2] == "B") p = evaluation::Preference::kB;
    else if (cells[2] == "TIE") p = evaluation::Preference::kTie;
    else throw FormatError("label must be A, B or TIE, got '" + cells[2] + "'", line_no);
    if (!by_pair.count(cells[0])) pair_order.push_back(cells[0]);
    auto& labels = by_pair[cells[0]];
    if (labels.count(cells[1])) throw FormatError("rater " + cells[1] + " rated pair " + cells[0] + " twice", line_no);
    labels[cells[1]] = p;
    raters[cells[1]] = true;
  }
  if (pair_order.empty()) throw FormatError("rating sheet has no ratings", line_no);
  evaluation::RatingSheet sheet;
  sheet.raters = raters.size();
  for (const auto& id : pair_order) {
    const auto& labels = by_pair[id];
    if (labels.size() != sheet.raters) {
      throw FormatError("pair " + id + " has " + std::to_string(labels.size()) + " ratings, expected " +
                        std::to_string(sheet.raters));
    }
    std::vector<evaluation::Preference> row;
    for (const auto& [rater, p] : labels) row.push_back(p);
    sheet.labels.push_back(std::move(row));
  }
  return sheet;
}

void write_rating_sheet(std::ostream& out, const evaluation::RatingSheet& sheet) {
  sheet.validate();
  out << "pair_id,rater_id,label\n";
  for (std::size_t p = 0; p < sheet.labels.size(); ++p) {
    for (std::size_t r = 0; r < sheet.raters; ++r) {
      const auto l = sheet.labels[p][r];
      out << 'p' << p << ",r" << r << ','
          << (l == evaluation::Preference::kA ? "A" : l == evaluation::Preference::kB ? "B" : "TIE") << '\n';
    }
  }
}

// ---- latency / reports -----------------------------------------------------

std::vector<evaluation::LatencyRecord> read_latency(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || strip_cr(line) != "t_e2e,t_speech,t_first_unit,t_face_extra") {
    throw FormatError("latency header must be t_e2e,t_speech,t_first_unit,t_face_extra", line_no);
  }
  std::vector<evaluation::LatencyRecord> out;
  for (; std::getline(in, line);) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 4) throw FormatError("latency row needs 4 columns", line_no);
    evaluation::LatencyRecord r{to_double(c[0], line_no, "t_e2e"), to_double(c[1], line_no, "t_speech"),
                                to_double(c[2], line_no, "t_first_unit"),
                                to_double(c[3], line_no, "t_face_extra")};
    if (r.t_e2e < 0 || r.t_speech < 0 || r.t_first_unit < 0 || r.t_face_extra < 0) {
      throw FormatError("latency values must be non-negative", line_no);
    }
    out.push_back(r);
  }
  return out;
}

void write_report(std::ostream& out, const MetricReport& report) {
  out << "metric,value\n";
  for (const auto& [name, value] : report) out << name << ',' << fmt("%.10g", value) << '\n';
}

// ---- corpus ----------------------------------------------------------------

namespace {

void put_tokens(std::ostream& out, const char* name, const std::vector<std::size_t>& ids) {
  out << "tokens " << name;
  for (std::size_t id : ids) out << ' ' << id;
  out << '\n';
}

void put_matrix(std::ostream& out, const char* name, const Tensor& t) {
  out << "matrix " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << fmt("%.17g", row[c]);
    out << '\n';
  }
}

struct SampleFile {
  std::map<std::string, std::vector<std::size_t>> tokens;
  std::map<std::string, Tensor> matrices;
  std::string path;

  const std::vector<std::size_t>& tok(const std::string& name) const {
    auto it = tokens.find(name);
    if (it == tokens.end()) throw FormatError(path + ": missing tokens " + name);
    return it->second;
  }
  const Tensor& mat(const std::string& name) const {
    auto it = matrices.find(name);
    if (it == matrices.end()) throw FormatError(path + ": missing matrix " + name);
    return it->second;
  }
};

SampleFile parse_sample(const std::string& path) {
  auto in = open_in(path);
  SampleFile f;
  f.path = path;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind, name;
    if (!(ls >> kind)) continue;
    if (!(ls >> name)) throw FormatError(path + ": entry without a name", line_no);
    if (kind == "tokens") {
      std::vector<std::size_t> ids;
      for (std::string t; ls >> t;) ids.push_back(to_size(t, line_no, "token"));
      f.tokens[name] = std::move(ids);
    } else if (kind == "matrix") {
      std::string rs, cs;
      ls >> rs >> cs;
      const std::size_t rows = to_size(rs, line_no, "row count");
      const std::size_t cols = to_size(cs, line_no, "column count");
      if (rows == 0 || cols == 0) throw FormatError(path + ": empty matrix " + name, line_no);
      Tensor t = Tensor::matrix(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        ++line_no;
        if (!std::getline(in, line)) throw FormatError(path + ": matrix " + name + " truncated", line_no);
        std::istringstream rsin(line);
        std::size_t c = 0;
        for (std::string v; rsin >> v; ++c) {
          if (c >= cols) throw FormatError(path + ": too many values in row", line_no);
          t(r, c) = to_double(v, line_no, "matrix value");
        }
        if (c != cols) throw FormatError(path + ": too few values in row", line_no);
      }
      f.matrices[name] = std::move(t);
    } else {
      throw FormatError(path + ": unknown entry kind '" + kind + "'", line_no);
    }
  }
  return f;
}

std::string sample_path(const std::string& dir, pipeline::DataKind k, std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof name, "%06zu.txt", i);
  return (fs::path(dir) / pipeline::kind_name(k) / name).string();
}

}  // namespace

void write_corpus(const std::string& dir, const pipeline::SyntheticCorpus& c) {
  using pipeline::DataKind;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  for (std::size_t k = 0; k < pipeline::kKindCount; ++k) {
    const auto sub = fs::path(dir) / pipeline::kind_name(static_cast<DataKind>(k));
    fs::create_directories(sub, ec);
    if (ec) throw IoError("cannot create " + sub.string() + ": " + ec.message());
  }
  KeyValues manifest = {
      {"seed", std::to_string(c.seed)},
      {"text_vocab", std::to_string(c.shape.text_vocab)},
      {"unit_vocab", std::to_string(c.shape.unit_vocab)},
      {"d_enc", std::to_string(c.shape.d_enc)},
      {"unit_rate", fmt("%.17g", c.shape.unit_rate)},
      {"fps", fmt("%.17g", c.shape.fps)},
  };
  for (std::size_t k = 0; k < pipeline::kKindCount; ++k) {
    const auto kind = static_cast<DataKind>(k);
    manifest[pipeline::kind_name(kind)] = std::to_string(c.count(kind));
  }
  write_kv_file((fs::path(dir) / "corpus.txt").string(), manifest);

  for (std::size_t i = 0; i < c.asr.size(); ++i) {
    auto out = open_out(sample_path(dir, DataKind::kAsr, i));
    put_tokens(out, "text", c.asr[i].text);
    put_matrix(out, "features", c.asr[i].features.frames);
  }
  for (std::size_t i = 0; i < c.tts.size(); ++i) {
    auto out = open_out(sample_path(dir, DataKind::kTts, i));
    put_tokens(out, "text", c.tts[i].text);
    put_tokens(out, "units", c.tts[i].units.units);
  }
  for (std::size_t i = 0; i < c.face.size(); ++i) {
    auto out = open_out(sample_path(dir, DataKind::kFace, i));
    put_tokens(out, "text", c.face[i].text);
    put_tokens(out, "units", c.face[i].units.units);
    put_matrix(out, "clip", c.face[i].clip.coeffs);
  }
  for (std::size_t i = 0; i < c.s2s.size(); ++i) {
    auto out = open_out(sample_path(dir, DataKind::kS2s, i));
    put_tokens(out, "question_text", c.s2s[i].question_text);
    put_matrix(out, "question", c.s2s[i].question.frames);
    put_tokens(out, "response", c.s2s[i].response);
    put_tokens(out, "units", c.s2s[i].units.units);
    put_matrix(out, "clip", c.s2s[i].clip.coeffs);
  }
  for (std::size_t i = 0; i < c.t2t.size(); ++i) {
    auto out = open_out(sample_path(dir, DataKind::kT2t, i));
    put_tokens(out, "prompt", c.t2t[i].prompt);
    put_tokens(out, "response", c.t2t[i].response);
  }
}

pipeline::SyntheticCorpus read_corpus(const std::string& dir) {
  using pipeline::DataKind;
  const std::string manifest_path = (fs::path(dir) / "corpus.txt").string();
  KeyValues m = read_kv_file(manifest_path);
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = m.find(key);
    if (it == m.end()) throw FormatError(manifest_path + ": missing key " + key);
    return it->second;
  };
  pipeline::SyntheticCorpus c;
  c.seed = std::stoull(need("seed"));
  c.shape.text_vocab = to_size(need("text_vocab"), 0, "text_vocab");
  c.shape.unit_vocab = to_size(need("unit_vocab"), 0, "unit_vocab");
  c.shape.d_enc = to_size(need("d_enc"), 0, "d_enc");
  c.shape.unit_rate = to_double(need("unit_rate"), 0, "unit_rate");
  c.shape.fps = to_double(need("fps"), 0, "fps");
  auto count = [&](DataKind k) { return to_size(need(pipeline::kind_name(k)), 0, "sample count"); };

  auto units = [&c](const std::vector<std::size_t>& ids) { return units::UnitSequence{ids, c.shape.unit_rate}; };
  auto clip = [&c](const Tensor& t) { return face::BlendshapeClip{t, c.shape.fps}; };
  for (std::size_t i = 0, n = count(DataKind::kAsr); i < n; ++i) {
    const auto f = parse_sample(sample_path(dir, DataKind::kAsr, i));
    c.asr.push_back({semantic::SpeechFeatures{f.mat("features")}, f.tok("text")});
  }
  for (std::size_t i = 0, n = count(DataKind::kTts); i < n; ++i) {
    const auto f = parse_sample(sample_path(dir, DataKind::kTts, i));
    c.tts.push_back({f.tok("text"), units(f.tok("units"))});
  }
  for (std::size_t i = 0, n = count(DataKind::kFace); i < n; ++i) {
    const auto f = parse_sample(sample_path(dir, DataKind::kFace, i));
    c.face.push_back({f.tok("text"), units(f.tok("units")), clip(f.mat("clip"))});
  }
  for (std::size_t i = 0, n = count(DataKind::kS2s); i < n; ++i) {
    const auto f = parse_sample(sample_path(dir, DataKind::kS2s, i));
    c.s2s.push_back({semantic::SpeechFeatures{f.mat("question")}, f.tok("question_text"), f.tok("response"),
                     units(f.tok("units")), clip(f.mat("clip"))});
  }
  for (std::size_t i = 0, n = count(DataKind::kT2t); i < n; ++i) {
    const auto f = parse_sample(sample_path(dir, DataKind::kT2t, i));
    c.t2t.push_back({f.tok("prompt"), f.tok("response")});
  }
  return c;
}

std::string read_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace exomni::io
