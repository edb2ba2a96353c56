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

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "exomni/evaluation/metrics.hpp"
#include "exomni/face/blendshape.hpp"
#include "exomni/pipeline/corpus.hpp"

// Plain-text and JSON file formats. Every reader reports malformed input as
// FormatError carrying the 1-based line number where one applies.
namespace exomni::io {

using KeyValues = std::map<std::string, std::string>;

// `key=value` lines; blank lines and lines starting with '#' are skipped.
KeyValues parse_kv(std::istream& in);
void write_kv(std::ostream& out, const KeyValues& kv);
KeyValues read_kv_file(const std::string& path);
void write_kv_file(const std::string& path, const KeyValues& kv);

// Units file: one sequence per line, "<id> <u1> <u2> ...".
struct UnitsRecord {
  std::string id;
  std::vector<std::size_t> units;
};
std::vector<UnitsRecord> read_units(std::istream& in);
void write_units(std::ostream& out, const std::vector<UnitsRecord>& records);

// Clip CSV: "# fps=<fps>", header "frame,time_sec,<52 ARKit names>", then one
// row per frame with 9 significant digits.
face::BlendshapeClip read_clip(std::istream& in);
void write_clip(std::ostream& out, const face::BlendshapeClip& clip);

// Rig JSON: {"base": N x 3, "deltas": 52 x N x 3, "lip_indices": [...]}.
evaluation::Rig read_rig(std::istream& in);
void write_rig(std::ostream& out, const evaluation::Rig& rig);

// Rating sheet CSV with header "pair_id,rater_id,label", label in {A,B,TIE}.
// Pairs are ordered by first appearance.
evaluation::RatingSheet read_rating_sheet(std::istream& in);
void write_rating_sheet(std::ostream& out, const evaluation::RatingSheet& sheet);

// Latency CSV with header "t_e2e,t_speech,t_first_unit,t_face_extra".
std::vector<evaluation::LatencyRecord> read_latency(std::istream& in);

// Metric report: header "metric,value", one metric per line.
using MetricReport = std::vector<std::pair<std::string, double>>;
void write_report(std::ostream& out, const MetricReport& report);

// One directory per data kind with one text file per sample, plus a
// manifest. Values are written with 17 significant digits so a reload is
// bit-exact.
void write_corpus(const std::string& dir, const pipeline::SyntheticCorpus& corpus);
pipeline::SyntheticCorpus read_corpus(const std::string& dir);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace exomni::io
