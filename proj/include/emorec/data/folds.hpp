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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "emorec/common/rng.hpp"
#include "emorec/data/manifest.hpp"
#include "json.hpp"

namespace emorec {

inline constexpr int kNumSessions = 5;

// Train/test partition of utterance ids; both lists are sorted and disjoint.
struct FoldSpec {
  int fold_id = 1;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;

  bool operator==(const FoldSpec&) const = default;
};

namespace detail {

inline void require_all_sessions(const Manifest& m) {
  std::set<int> sessions;
  for (const auto& r : m) sessions.insert(r.session);
  for (int s = 1; s <= kNumSessions; ++s)
    if (!sessions.count(s))
      throw DataError("manifest has no utterances from session " + std::to_string(s));
}

}  // namespace detail

// Leave-one-session-out: fold k tests on session k and trains on the rest.
inline std::vector<FoldSpec> make_session_folds(const Manifest& m) {
  detail::require_all_sessions(m);
  std::vector<FoldSpec> folds;
  for (int k = 1; k <= kNumSessions; ++k) {
    FoldSpec f;
    f.fold_id = k;
    for (const auto& r : m) (r.session == k ? f.test_ids : f.train_ids).push_back(r.utterance_id);
    std::sort(f.train_ids.begin(), f.train_ids.end());
    std::sort(f.test_ids.begin(), f.test_ids.end());
    folds.push_back(std::move(f));
  }
  return folds;
}

// Speaker-identification folds. Fold k covers the four sessions that session
// fold k trains on; inside them every speaker's utterances are shuffled
// (seeded) and split floor(80%) train / rest test, so a speaker with n >= 1
// utterances always has at least one test utterance.
inline std::vector<FoldSpec> make_probe_folds(const Manifest& m, std::uint64_t seed) {
  detail::require_all_sessions(m);
  std::vector<FoldSpec> folds;
  for (int k = 1; k <= kNumSessions; ++k) {
    std::map<std::string, std::vector<std::string>> by_speaker;
    for (const auto& r : m)
      if (r.session != k) by_speaker[r.speaker_id].push_back(r.utterance_id);
    FoldSpec f;
    f.fold_id = k;
    for (auto& [speaker, ids] : by_speaker) {
      std::sort(ids.begin(), ids.end());
      Rng rng(seed, "probe-fold-" + std::to_string(k) + "/" + speaker);
      std::shuffle(ids.begin(), ids.end(), rng.engine());
      const std::size_t n_train = (ids.size() * 4) / 5;
      f.train_ids.insert(f.train_ids.end(), ids.begin(), ids.begin() + static_cast<long>(n_train));
      f.test_ids.insert(f.test_ids.end(), ids.begin() + static_cast<long>(n_train), ids.end());
    }
    std::sort(f.train_ids.begin(), f.train_ids.end());
    std::sort(f.test_ids.begin(), f.test_ids.end());
    folds.push_back(std::move(f));
  }
  return folds;
}

// A single fold that trains on every utterance and has no test set.
inline FoldSpec make_full_fold(const Manifest& m) {
  FoldSpec f;
  f.fold_id = 0;
  for (const auto& r : m) f.train_ids.push_back(r.utterance_id);
  std::sort(f.train_ids.begin(), f.train_ids.end());
  return f;
}

inline void validate_fold(const FoldSpec& f) {
  std::vector<std::string> both;
  std::set_intersection(f.train_ids.begin(), f.train_ids.end(), f.test_ids.begin(),
                        f.test_ids.end(), std::back_inserter(both));
  if (!both.empty())
    throw DataError("fold " + std::to_string(f.fold_id) + " has " + std::to_string(both.size()) +
                    " utterances in both train and test (e.g. " + both.front() + ")");
}

// Fold file: one JSON object per line, {"fold_id", "train_ids", "test_ids"}.
inline void write_folds(const std::filesystem::path& path, const std::vector<FoldSpec>& folds) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write fold file " + path.string());
  for (const auto& f : folds) {
    nlohmann::json j{{"fold_id", f.fold_id}, {"train_ids", f.train_ids}, {"test_ids", f.test_ids}};
    out << j.dump() << '\n';
  }
}

inline std::vector<FoldSpec> read_folds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open fold file " + path.string());
  std::vector<FoldSpec> folds;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      FoldSpec f;
      f.fold_id = j.at("fold_id").get<int>();
      f.train_ids = j.at("train_ids").get<std::vector<std::string>>();
      f.test_ids = j.at("test_ids").get<std::vector<std::string>>();
      std::sort(f.train_ids.begin(), f.train_ids.end());
      std::sort(f.test_ids.begin(), f.test_ids.end());
      validate_fold(f);
      folds.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("fold file line " + std::to_string(n) + ": " + e.what());
    }
  }
  return folds;
}

}  // namespace emorec
