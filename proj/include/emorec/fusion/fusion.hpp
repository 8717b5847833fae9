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

// Late fusion p_f = w1 p_s + w2 p_t and the weight-grid sweep.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "emorec/eval/metrics.hpp"
#include "emorec/fusion/prob_file.hpp"
#include "json.hpp"

namespace emorec::fusion {

struct FusionWeights {
  double w1 = 0.6;  // speech
  double w2 = 1.0;  // text

  void validate() const {
    if (!(w1 >= 0.0) || !(w2 >= 0.0)) throw UsageError("fusion weights must be >= 0");
    if (!(w1 + w2 > 0.0)) throw UsageError("fusion weights must not both be zero");
  }
};

// Unnormalized fused scores.
inline EmotionProbs fuse(const EmotionProbs& ps, const EmotionProbs& pt, const FusionWeights& w) {
  w.validate();
  EmotionProbs f;
  f.normalized = false;
  for (std::size_t k = 0; k < f.p.size(); ++k) f.p[k] = w.w1 * ps.p[k] + w.w2 * pt.p[k];
  return f;
}

// {0, 1/steps, ..., 1}^2 without (0, 0), w1-major.
inline std::vector<FusionWeights> default_grid(int steps = 10) {
  if (steps < 1) throw UsageError("grid needs at least one step");
  std::vector<FusionWeights> g;
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j)
      if (i || j) g.push_back({static_cast<double>(i) / steps, static_cast<double>(j) / steps});
  return g;
}

// Speech and text records paired by utterance id, in speech-file order.
struct AlignedProbs {
  std::vector<std::string> ids;
  std::vector<EmotionProbs> speech, text;
};

inline AlignedProbs align(const std::vector<ProbRecord>& speech, const std::vector<ProbRecord>& text) {
  std::map<std::string, const ProbRecord*> by_id;
  for (const auto& r : text) by_id[r.utterance_id] = &r;
  std::map<std::string, bool> in_speech;
  AlignedProbs a;
  std::vector<std::string> only_speech, only_text;
  for (const auto& r : speech) {
    in_speech[r.utterance_id] = true;
    auto it = by_id.find(r.utterance_id);
    if (it == by_id.end()) {
      only_speech.push_back(r.utterance_id);
      continue;
    }
    a.ids.push_back(r.utterance_id);
    a.speech.push_back(r.probs);
    a.text.push_back(it->second->probs);
  }
  for (const auto& r : text)
    if (!in_speech.count(r.utterance_id)) only_text.push_back(r.utterance_id);
  if (!only_speech.empty() || !only_text.empty()) {
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size() && i < 20; ++i) s += (i ? ", " : "") + v[i];
      if (v.size() > 20) s += ", ... (" + std::to_string(v.size()) + " total)";
      return s;
    };
    std::string msg = "speech and text probabilities are not aligned";
    if (!only_speech.empty()) msg += "; only in speech: " + list(only_speech);
    if (!only_text.empty()) msg += "; only in text: " + list(only_text);
    throw DataError(msg);
  }
  return a;
}

enum class SweepCriterion { kOverallAccuracy, kMacroRecall };

inline SweepCriterion parse_criterion(const std::string& s) {
  if (s == "overall_accuracy") return SweepCriterion::kOverallAccuracy;
  if (s == "macro_recall") return SweepCriterion::kMacroRecall;
  throw UsageError("unknown sweep criterion '" + s + "' (overall_accuracy or macro_recall)");
}

inline const char* criterion_name(SweepCriterion c) {
  return c == SweepCriterion::kOverallAccuracy ? "overall_accuracy" : "macro_recall";
}

struct SweepRow {
  FusionWeights w;
  double macro_recall = 0.0;
  double overall_accuracy = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepRow best;
  SweepCriterion criterion = SweepCriterion::kOverallAccuracy;
  std::string tuned_on;  // e.g. "test folds" or "held-out"
};

inline std::vector<int> fused_decisions(const AlignedProbs& a, const FusionWeights& w) {
  std::vector<int> out;
  out.reserve(a.ids.size());
  for (std::size_t i = 0; i < a.ids.size(); ++i) out.push_back(fuse(a.speech[i], a.text[i], w).argmax());
  return out;
}

// Best pair by the criterion; ties go to the smaller w1, then smaller w2.
inline SweepResult sweep(const AlignedProbs& a, const std::vector<int>& labels, const std::vector<FusionWeights>& grid,
                         SweepCriterion criterion = SweepCriterion::kOverallAccuracy, std::string tuned_on = {}) {
  if (a.ids.empty()) throw UsageError("sweep over no utterances");
  if (labels.size() != a.ids.size()) throw UsageError("sweep labels do not match the utterances");
  if (grid.empty()) throw UsageError("empty fusion grid");
  SweepResult r;
  r.criterion = criterion;
  r.tuned_on = std::move(tuned_on);
  auto score = [&](const SweepRow& x) {
    return criterion == SweepCriterion::kOverallAccuracy ? x.overall_accuracy : x.macro_recall;
  };
  bool have = false;
  for (const auto& w : grid) {
    const auto preds = fused_decisions(a, w);
    const eval::ConfusionMatrix c(preds, labels);
    SweepRow row{w, c.macro_recall(), c.overall_accuracy()};
    r.rows.push_back(row);
    const bool better = !have || score(row) > score(r.best) ||
                        (score(row) == score(r.best) &&
                         (row.w.w1 < r.best.w.w1 || (row.w.w1 == r.best.w.w1 && row.w.w2 < r.best.w.w2)));
    if (better) {
      r.best = row;
      have = true;
    }
  }
  return r;
}

inline std::string render_sweep(const SweepResult& r) {
  std::string s = "w1\tw2\tmacro_recall (WA)\toverall_accuracy (UA)\n";
  char buf[128];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "%.2f\t%.2f\t%.2f\t%.2f\n", row.w.w1, row.w.w2, row.macro_recall,
                  row.overall_accuracy);
    s += buf;
  }
  std::snprintf(buf, sizeof(buf), "best (by %s%s%s): w1=%.2f w2=%.2f macro_recall=%.2f overall_accuracy=%.2f\n",
                criterion_name(r.criterion), r.tuned_on.empty() ? "" : ", tuned on ", r.tuned_on.c_str(),
                r.best.w.w1, r.best.w.w2, r.best.macro_recall, r.best.overall_accuracy);
  s += buf;
  return s;
}

inline nlohmann::json to_json(const SweepResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"w1", x.w.w1}, {"w2", x.w.w2}, {"macro_recall", x.macro_recall},
                    {"overall_accuracy", x.overall_accuracy}});
  return {{"rows", rows},
          {"criterion", criterion_name(r.criterion)},
          {"tuned_on", r.tuned_on},
          {"best",
           {{"w1", r.best.w.w1}, {"w2", r.best.w.w2}, {"macro_recall", r.best.macro_recall},
            {"overall_accuracy", r.best.overall_accuracy}}}};
}

}  // namespace emorec::fusion
