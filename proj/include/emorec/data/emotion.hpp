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

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "emorec/common/error.hpp"

namespace emorec {

// The four target classes; the integer value is the class index used by
// every model and probability file.
enum class Emotion : int { kAngry = 0, kNeutral = 1, kSad = 2, kHappy = 3 };

inline constexpr int kNumEmotions = 4;
inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::kAngry, Emotion::kNeutral, Emotion::kSad, Emotion::kHappy};

inline std::string_view emotion_name(Emotion e) {
  switch (e) {
    case Emotion::kAngry: return "Angry";
    case Emotion::kNeutral: return "Neutral";
    case Emotion::kSad: return "Sad";
    case Emotion::kHappy: return "Happy";
  }
  return "?";
}

inline int emotion_index(Emotion e) { return static_cast<int>(e); }

inline Emotion emotion_from_index(int i) {
  if (i < 0 || i >= kNumEmotions) throw DataError("emotion index out of range: " + std::to_string(i));
  return static_cast<Emotion>(i);
}

inline Emotion parse_emotion(std::string_view s) {
  for (Emotion e : kAllEmotions)
    if (emotion_name(e) == s) return e;
  throw DataError("unknown emotion '" + std::string(s) + "'");
}

// Annotator-level categories before the 4-class policy is applied.
enum class RawLabel {
  kAngry, kHappy, kExcited, kSad, kNeutral, kFrustrated, kSurprised,
  kFearful, kDisgusted, kOther, kUndecided
};

// Accepts IEMOCAP three-letter codes and the long category names used in the
// evaluator lines, ignoring case. Returns nullopt for anything else.
inline std::optional<RawLabel> parse_raw_label(std::string_view s) {
  struct Entry {
    std::string_view text;
    RawLabel label;
  };
  static constexpr Entry kTable[] = {
      {"ang", RawLabel::kAngry},      {"Anger", RawLabel::kAngry},
      {"Angry", RawLabel::kAngry},    {"hap", RawLabel::kHappy},
      {"Happiness", RawLabel::kHappy}, {"Happy", RawLabel::kHappy},
      {"exc", RawLabel::kExcited},    {"Excited", RawLabel::kExcited},
      {"sad", RawLabel::kSad},        {"Sadness", RawLabel::kSad},
      {"Sad", RawLabel::kSad},        {"neu", RawLabel::kNeutral},
      {"Neutral", RawLabel::kNeutral}, {"Neutral state", RawLabel::kNeutral},
      {"fru", RawLabel::kFrustrated}, {"Frustration", RawLabel::kFrustrated},
      {"sur", RawLabel::kSurprised},  {"Surprise", RawLabel::kSurprised},
      {"fea", RawLabel::kFearful},    {"Fear", RawLabel::kFearful},
      {"dis", RawLabel::kDisgusted},  {"Disgust", RawLabel::kDisgusted},
      {"oth", RawLabel::kOther},      {"Other", RawLabel::kOther},
      {"xxx", RawLabel::kUndecided},
  };
  auto same = [](std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
        return false;
    return true;
  };
  for (const auto& e : kTable)
    if (same(e.text, s)) return e.label;
  return std::nullopt;
}

inline std::optional<Emotion> target_class(RawLabel l) {
  switch (l) {
    case RawLabel::kAngry: return Emotion::kAngry;
    case RawLabel::kNeutral: return Emotion::kNeutral;
    case RawLabel::kSad: return Emotion::kSad;
    case RawLabel::kHappy: return Emotion::kHappy;
    default: return std::nullopt;
  }
}

}  // namespace emorec
