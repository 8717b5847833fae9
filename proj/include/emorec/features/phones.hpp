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
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "emorec/common/error.hpp"
#include "emorec/common/strings.hpp"
#include "emorec/features/feature_types.hpp"
#include "json.hpp"

namespace emorec {

// Phone inventory "phones-v1", exactly 128 ids:
//   0       silence
//   1       not-identified phone
//   2..40   the 39 ARPAbet phones (stress markers stripped)
//   41..44  corpus special tokens
//   45..127 reserved
class PhoneInventory {
 public:
  static constexpr std::string_view kVersion = "phones-v1";
  static constexpr std::int32_t kSilence = 0;
  static constexpr std::int32_t kNotIdentified = 1;

  static const PhoneInventory& instance() {
    static const PhoneInventory inv;
    return inv;
  }

  std::int32_t size() const { return kNumPhoneIds; }
  const std::string& label(std::int32_t id) const { return labels_.at(static_cast<std::size_t>(id)); }

  // Maps an aligner label to an id. Accepts ARPAbet with or without stress
  // digits, Gentle-style position suffixes ("ah_B"), "sil"/"sp", and the
  // bracketed special tokens. Anything else is not-identified.
  std::int32_t id_of(std::string_view raw) const {
    std::string s(trim(raw));
    if (s.empty()) return kNotIdentified;
    if (s.front() == '[') {
      for (std::int32_t i = kFirstSpecial; i < kFirstSpecial + kNumSpecial; ++i)
        if (labels_[static_cast<std::size_t>(i)] == s) return i;
      return kNotIdentified;
    }
    if (auto us = s.find('_'); us != std::string::npos) s = s.substr(0, us);
    while (!s.empty() && std::isdigit(static_cast<unsigned char>(s.back()))) s.pop_back();
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "SIL" || s == "SP" || s == "<SIL>") return kSilence;
    for (std::int32_t i = kFirstPhone; i < kFirstPhone + kNumArpabet; ++i)
      if (labels_[static_cast<std::size_t>(i)] == s) return i;
    return kNotIdentified;
  }

 private:
  static constexpr std::int32_t kFirstPhone = 2;
  static constexpr std::int32_t kNumArpabet = 39;
  static constexpr std::int32_t kFirstSpecial = kFirstPhone + kNumArpabet;
  static constexpr std::int32_t kNumSpecial = 4;

  PhoneInventory() {
    static constexpr std::array<std::string_view, kNumArpabet> arpabet = {
        "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",
        "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY",
        "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};
    static constexpr std::array<std::string_view, kNumSpecial> special = {
        "[LAUGHTER]", "[BREATHING]", "[GARBAGE]", "[LIPSMACK]"};
    labels_.resize(kNumPhoneIds);
    labels_[kSilence] = "<sil>";
    labels_[kNotIdentified] = "<unk>";
    for (std::int32_t i = 0; i < kNumArpabet; ++i)
      labels_[static_cast<std::size_t>(kFirstPhone + i)] = arpabet[static_cast<std::size_t>(i)];
    for (std::int32_t i = 0; i < kNumSpecial; ++i)
      labels_[static_cast<std::size_t>(kFirstSpecial + i)] = special[static_cast<std::size_t>(i)];
    for (std::int32_t i = kFirstSpecial + kNumSpecial; i < kNumPhoneIds; ++i)
      labels_[static_cast<std::size_t>(i)] = "<reserved_" + std::to_string(i) + ">";
  }

  std::vector<std::string> labels_;
};

struct PhoneInterval {
  std::string label;
  double start_s = 0.0;
  double end_s = 0.0;
};

using PhoneAlignment = std::vector<PhoneInterval>;

inline constexpr std::int64_t kFrameHopUs = 20000;

// Frame t covers [t * 20 ms, (t + 1) * 20 ms). Each frame takes the phone
// that overlaps it longest; an exact tie goes to the earlier-starting phone.
// Frames no phone overlaps are silence. Times are compared in integer
// microseconds so equal overlaps are detected exactly.
inline std::vector<std::int32_t> phone_sequence(const PhoneAlignment& alignment, std::int64_t frames) {
  const auto& inv = PhoneInventory::instance();
  struct Span {
    std::int64_t start, end;
    std::int32_t id;
  };
  std::vector<Span> spans;
  spans.reserve(alignment.size());
  for (const auto& p : alignment) {
    const auto s = static_cast<std::int64_t>(std::llround(p.start_s * 1e6));
    const auto e = static_cast<std::int64_t>(std::llround(p.end_s * 1e6));
    if (e > s) spans.push_back({s, e, inv.id_of(p.label)});
  }
  std::stable_sort(spans.begin(), spans.end(),
                   [](const Span& a, const Span& b) { return a.start < b.start; });
  std::vector<std::int32_t> ids(static_cast<std::size_t>(std::max<std::int64_t>(frames, 0)),
                                PhoneInventory::kSilence);
  for (std::int64_t t = 0; t < frames; ++t) {
    const std::int64_t f0 = t * kFrameHopUs, f1 = f0 + kFrameHopUs;
    std::int64_t best = 0;
    for (const auto& sp : spans) {
      const std::int64_t ov = std::min(f1, sp.end) - std::max(f0, sp.start);
      if (ov > best) {
        best = ov;
        ids[static_cast<std::size_t>(t)] = sp.id;
      }
    }
  }
  return ids;
}

// Plain alignment file: one "label start_s end_s" triple per line.
inline PhoneAlignment read_alignment_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alignment " + path.string());
  PhoneAlignment out;
  std::string label;
  double s = 0, e = 0;
  while (in >> label >> s >> e) {
    if (e < s) throw DataError("alignment interval with negative duration in " + path.string());
    out.push_back({label, s, e});
  }
  return out;
}

// Gentle aligner JSON: words[].start plus consecutive phones[].duration.
inline PhoneAlignment parse_gentle_json(const nlohmann::json& j) {
  PhoneAlignment out;
  for (const auto& w : j.value("words", nlohmann::json::array())) {
    if (w.value("case", "") != "success" || !w.contains("start")) continue;
    double t = w.at("start").get<double>();
    for (const auto& p : w.value("phones", nlohmann::json::array())) {
      const double d = p.at("duration").get<double>();
      out.push_back({p.at("phone").get<std::string>(), t, t + d});
      t += d;
    }
  }
  return out;
}

inline PhoneAlignment read_alignment(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open alignment " + path.string());
    try {
      return parse_gentle_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad alignment json " + path.string() + ": " + e.what());
    }
  }
  return read_alignment_text(path);
}

}  // namespace emorec
