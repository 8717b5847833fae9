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

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emorec/common/error.hpp"
#include "emorec/common/strings.hpp"
#include "emorec/data/emotion.hpp"

namespace emorec {

struct UtteranceRecord {
  std::string utterance_id;
  int session = 1;
  std::string speaker_id;
  std::string audio_path;
  std::string transcript;
  Emotion emotion = Emotion::kNeutral;
  double duration_s = 0.0;

  bool operator==(const UtteranceRecord&) const = default;
};

using Manifest = std::vector<UtteranceRecord>;

// One utterance as delivered by the corpus annotation, before the label
// policy: every annotator's categorical label plus metadata.
struct RawAnnotation {
  std::string utterance_id;
  int session = 0;
  std::string speaker_id;
  std::string audio_path;
  std::string transcript;
  double duration_s = 0.0;
  std::vector<std::string> labels;
  std::string row;  // source identifier used in error messages
};

struct LabelPolicy {
  // false (default): find the >= 2-annotator majority first, then map
  // Excited to Happy. true: map Excited to Happy on every annotator label
  // before counting, so (Happy, Excited, Sad) counts as a Happy majority.
  bool merge_before_agreement = false;
  int min_agreement = 2;
};

namespace detail {

inline std::string row_name(const RawAnnotation& a) {
  std::string id = a.utterance_id.empty() ? "<no id>" : a.utterance_id;
  return a.row.empty() ? id : a.row + " (" + id + ")";
}

}  // namespace detail

// Applies the label policy: keep utterances where at least two annotators
// agree, merge Excited into Happy, keep only the four target classes.
// Output is sorted by utterance_id.
inline Manifest build_manifest(const std::vector<RawAnnotation>& raw,
                               const LabelPolicy& policy = {}) {
  Manifest out;
  std::map<std::string, int> speaker_session;
  std::set<std::string> seen;
  for (const auto& a : raw) {
    const std::string row = detail::row_name(a);
    if (a.utterance_id.empty() || a.speaker_id.empty())
      throw DataError("malformed annotation row " + row + ": missing id or speaker");
    if (a.session < 1 || a.session > 5)
      throw DataError("malformed annotation row " + row + ": session must be 1-5");
    if (a.labels.empty())
      throw DataError("malformed annotation row " + row + ": no annotator labels");
    if (!seen.insert(a.utterance_id).second)
      throw DataError("duplicate utterance id in annotations: " + row);
    auto [it, inserted] = speaker_session.emplace(a.speaker_id, a.session);
    if (!inserted && it->second != a.session)
      throw DataError("speaker " + a.speaker_id + " appears in sessions " +
                      std::to_string(it->second) + " and " + std::to_string(a.session));

    std::map<RawLabel, int> votes;
    for (const auto& text : a.labels) {
      auto label = parse_raw_label(trim(text));
      if (!label)
        throw DataError("unknown label '" + text + "' in annotation row " + row);
      RawLabel l = *label;
      if (policy.merge_before_agreement && l == RawLabel::kExcited) l = RawLabel::kHappy;
      ++votes[l];
    }
    int best_count = 0;
    int holders = 0;
    RawLabel winner = RawLabel::kUndecided;
    for (const auto& [label, count] : votes) {
      if (count > best_count) {
        best_count = count;
        winner = label;
        holders = 1;
      } else if (count == best_count) {
        ++holders;
      }
    }
    if (best_count < policy.min_agreement || holders != 1) continue;
    if (winner == RawLabel::kExcited) winner = RawLabel::kHappy;
    const auto cls = target_class(winner);
    if (!cls) continue;
    out.push_back(UtteranceRecord{a.utterance_id, a.session, a.speaker_id,
                                  a.audio_path, a.transcript, *cls, a.duration_s});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.utterance_id < y.utterance_id;
  });
  return out;
}

inline double total_duration_s(const Manifest& m) {
  double s = 0.0;
  for (const auto& r : m) s += r.duration_s;
  return s;
}

// ---------------------------------------------------------------------------
// Manifest file: one record per line,
//   utterance_id|session|speaker_id|audio_path|transcript|emotion|duration_s
// Backslash escapes '|', '\\' and newlines inside fields.

namespace detail {

inline std::string escape_field(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

inline std::vector<std::string> split_escaped(std::string_view line) {
  std::vector<std::string> fields(1);
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && i + 1 < line.size()) {
      const char n = line[++i];
      fields.back() += (n == 'n') ? '\n' : n;
    } else if (c == '|') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace detail

inline std::string format_manifest_line(const UtteranceRecord& r) {
  return detail::escape_field(r.utterance_id) + '|' + std::to_string(r.session) + '|' +
         detail::escape_field(r.speaker_id) + '|' + detail::escape_field(r.audio_path) +
         '|' + detail::escape_field(r.transcript) + '|' +
         std::string(emotion_name(r.emotion)) + '|' + format_double(r.duration_s);
}

inline UtteranceRecord parse_manifest_line(std::string_view line, std::size_t line_no) {
  auto f = detail::split_escaped(line);
  const std::string where = "manifest line " + std::to_string(line_no);
  if (f.size() != 7) throw DataError(where + ": expected 7 fields, got " + std::to_string(f.size()));
  UtteranceRecord r;
  r.utterance_id = f[0];
  auto session = parse_int<int>(f[1]);
  if (!session || *session < 1 || *session > 5) throw DataError(where + ": bad session '" + f[1] + "'");
  r.session = *session;
  r.speaker_id = f[2];
  r.audio_path = f[3];
  r.transcript = f[4];
  try {
    r.emotion = parse_emotion(f[5]);
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
  auto dur = parse_double(f[6]);
  if (!dur) throw DataError(where + ": bad duration '" + f[6] + "'");
  r.duration_s = *dur;
  if (r.utterance_id.empty() || r.speaker_id.empty()) throw DataError(where + ": empty id");
  return r;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& r : m) out << format_manifest_line(r) << '\n';
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    m.push_back(parse_manifest_line(line, n));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Raw annotation table (tab separated):
//   utterance_id, session, speaker_id, audio_path, duration_s,
//   comma-separated annotator labels, transcript

inline std::vector<RawAnnotation> read_raw_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotations " + path.string());
  std::vector<RawAnnotation> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    const std::string row = path.filename().string() + ":" + std::to_string(n);
    if (f.size() != 7) throw DataError("malformed annotation row " + row + ": expected 7 columns");
    RawAnnotation a;
    a.row = row;
    a.utterance_id = std::string(trim(f[0]));
    auto session = parse_int<int>(f[1]);
    if (!session) throw DataError("malformed annotation row " + row + ": bad session");
    a.session = *session;
    a.speaker_id = std::string(trim(f[2]));
    a.audio_path = std::string(trim(f[3]));
    auto dur = parse_double(f[4]);
    if (!dur) throw DataError("malformed annotation row " + row + ": bad duration");
    a.duration_s = *dur;
    for (auto& l : split(f[5], ','))
      if (!trim(l).empty()) a.labels.emplace_back(trim(l));
    a.transcript = std::string(trim(f[6]));
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace emorec
