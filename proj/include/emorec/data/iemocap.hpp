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

// Reader for the IEMOCAP release layout:
//   SessionK/dialog/EmoEvaluation/<dialog>.txt   per-turn evaluator labels
//   SessionK/dialog/transcriptions/<dialog>.txt  per-turn transcripts
//   SessionK/sentences/wav/<dialog>/<turn>.wav   segmented audio

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "emorec/data/manifest.hpp"

namespace emorec {

namespace detail {

// "Ses01F_impro01_M013" -> speaker "Ses01M"
inline std::string iemocap_speaker(const std::string& turn) {
  const auto us = turn.rfind('_');
  if (turn.size() < 5 || us == std::string::npos || us + 1 >= turn.size())
    throw DataError("unrecognised IEMOCAP turn name '" + turn + "'");
  return turn.substr(0, 5) + turn[us + 1];
}

inline std::map<std::string, std::string> read_iemocap_transcripts(
    const std::filesystem::path& file) {
  std::map<std::string, std::string> out;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find("]:");
    const auto space = line.find(' ');
    if (colon == std::string::npos || space == std::string::npos) continue;
    out[line.substr(0, space)] = std::string(trim(line.substr(colon + 2)));
  }
  return out;
}

}  // namespace detail

// Collects one RawAnnotation per evaluated turn. Annotator labels come from
// the "C-E*" evaluator lines (first category of each line); actor
// self-assessments are skipped.
inline std::vector<RawAnnotation> read_iemocap(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  static const std::regex header(R"(^\[(\d+\.?\d*) - (\d+\.?\d*)\]\s+(\S+)\s+(\S+))");
  std::vector<RawAnnotation> out;
  for (int session = 1; session <= 5; ++session) {
    const fs::path sdir = root / ("Session" + std::to_string(session));
    const fs::path evals = sdir / "dialog" / "EmoEvaluation";
    if (!fs::is_directory(evals))
      throw DataError("IEMOCAP session " + std::to_string(session) + " missing at " + evals.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(evals))
      if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const std::string dialog = file.stem().string();
      auto transcripts =
          detail::read_iemocap_transcripts(sdir / "dialog" / "transcriptions" / (dialog + ".txt"));
      std::ifstream in(file);
      std::string line;
      std::size_t line_no = 0;
      RawAnnotation* current = nullptr;
      while (std::getline(in, line)) {
        ++line_no;
        std::smatch m;
        if (std::regex_search(line, m, header)) {
          RawAnnotation a;
          a.utterance_id = m[3];
          a.session = session;
          a.speaker_id = detail::iemocap_speaker(a.utterance_id);
          a.duration_s = std::stod(m[2]) - std::stod(m[1]);
          a.audio_path = (sdir / "sentences" / "wav" / dialog / (a.utterance_id + ".wav")).string();
          auto t = transcripts.find(a.utterance_id);
          if (t != transcripts.end()) a.transcript = t->second;
          a.row = file.filename().string() + ":" + std::to_string(line_no);
          out.push_back(std::move(a));
          current = &out.back();
        } else if (current && starts_with(line, "C-E")) {
          const auto tab = line.find(':');
          if (tab == std::string::npos) continue;
          auto cats = split(line.substr(tab + 1), ';');
          if (!cats.empty() && !trim(cats[0]).empty())
            current->labels.emplace_back(trim(cats[0]));
        }
      }
    }
  }
  return out;
}

}  // namespace emorec
