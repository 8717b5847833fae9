// Copyright (c) 2026 The emorec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Probability files: one utterance per line,
//   <utterance_id> TAB p_angry TAB p_neutral TAB p_sad TAB p_happy TAB <modality>
// with shortest round-trip decimal formatting. Lines starting with '#' are
// comments.

#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "emorec/common/strings.hpp"
#include "emorec/data/probs.hpp"

namespace emorec::fusion {

struct ProbRecord {
  std::string utterance_id;
  EmotionProbs probs;
  std::string modality;  // "speech", "text" or "fused"
};

inline void write_prob_file(const std::filesystem::path& path, const std::vector<ProbRecord>& recs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write probability file " + path.string());
  out << "# utterance_id\tAngry\tNeutral\tSad\tHappy\tmodality\n";
  for (const auto& r : recs) {
    if (r.utterance_id.find_first_of("\t\n") != std::string::npos)
      throw DataError("utterance id contains a tab or newline: " + r.utterance_id);
    out << r.utterance_id;
    for (double v : r.probs.p) out << '\t' << format_double(v);
    out << '\t' << r.modality << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

inline std::vector<ProbRecord> read_prob_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open probability file " + path.string());
  std::vector<ProbRecord> recs;
  std::set<std::string> seen;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty() || line.front() == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto f = split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(n);
    if (f.size() != 6) throw DataError(where + ": expected 6 tab-separated fields, got " + std::to_string(f.size()));
    ProbRecord r;
    r.utterance_id = f[0];
    r.modality = std::string(trim(f[5]));
    for (int k = 0; k < kNumEmotions; ++k) {
      const auto v = parse_double(f[static_cast<std::size_t>(k + 1)]);
      if (!v) throw DataError(where + ": bad probability '" + f[static_cast<std::size_t>(k + 1)] + "'");
      r.probs.p[static_cast<std::size_t>(k)] = *v;
    }
    r.probs.normalized = r.modality != "fused";
    try {
      r.probs.validate();
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!seen.insert(r.utterance_id).second) throw DataError(where + ": duplicate utterance " + r.utterance_id);
    recs.push_back(std::move(r));
  }
  return recs;
}

}  // namespace emorec::fusion
