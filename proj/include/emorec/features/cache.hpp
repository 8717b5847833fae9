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

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>

#include "emorec/features/array_record.hpp"
#include "emorec/features/feature_types.hpp"

namespace emorec {

enum class FeatureKind { kSpeech, kText };

inline const char* feature_kind_name(FeatureKind k) {
  return k == FeatureKind::kSpeech ? "speech" : "text";
}

// One directory per corpus; one record file per (utterance, kind). The
// record carries the extractor fingerprint it was produced with, and a read
// that expects a different fingerprint fails as stale.
class FeatureCache {
 public:
  explicit FeatureCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path path_of(const std::string& id, FeatureKind kind) const {
    std::string safe;
    bool changed = false;
    for (char c : id) {
      const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
      safe.push_back(ok ? c : '_');
      changed |= !ok;
    }
    if (changed || safe.empty() || safe.front() == '.') {
      char h[20];
      std::snprintf(h, sizeof(h), "%016llx", static_cast<unsigned long long>(fnv1a64(id)));
      safe += "-";
      safe += h;
    }
    return dir_ / (safe + "." + feature_kind_name(kind) + ".rec");
  }

  void put(const std::string& id, FeatureKind kind, const ArrayRecord& rec) const {
    for (const auto& a : rec.arrays)
      for (float v : a.f32)
        if (!std::isfinite(v))
          throw CacheError(CacheError::Kind::kIo, "refusing to cache non-finite array '" + a.name +
                                                      "' for " + id);
    ArrayRecord r = rec;
    r.metadata["utterance_id"] = id;
    write_record_file(path_of(id, kind), r);
  }

  ArrayRecord get(const std::string& id, FeatureKind kind, const std::string& fingerprint) const {
    ArrayRecord r = read_record_file(path_of(id, kind));
    if (r.fingerprint != fingerprint)
      throw CacheError(CacheError::Kind::kStale, "stale " + std::string(feature_kind_name(kind)) +
                                                     " record for " + id + ": built by '" +
                                                     r.fingerprint + "', expected '" + fingerprint + "'");
    return r;
  }

  // True when a record exists, decodes, and matches the fingerprint.
  bool fresh(const std::string& id, FeatureKind kind, const std::string& fingerprint) const {
    try {
      get(id, kind, fingerprint);
      return true;
    } catch (const CacheError&) {
      return false;
    }
  }

 private:
  std::filesystem::path dir_;
};

// Read access to per-utterance features, independent of where they live.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::shared_ptr<const SpeechFeatureSet> speech(const std::string& id) const = 0;
  virtual std::shared_ptr<const TextFeatureSet> text(const std::string& id) const = 0;
};

// Thread-safe least-recently-used memo bounded by payload bytes.
template <class V>
class ByteLru {
 public:
  explicit ByteLru(std::size_t budget) : budget_(budget) {}

  template <class Make>
  std::shared_ptr<const V> get(const std::string& key, std::size_t (*bytes)(const V&), Make&& make) {
    {
      std::lock_guard lock(mu_);
      if (auto it = index_.find(key); it != index_.end()) {
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
      }
    }
    std::shared_ptr<const V> v = std::make_shared<const V>(make());
    std::lock_guard lock(mu_);
    if (index_.count(key)) return index_[key]->second;
    const std::size_t n = bytes(*v);
    if (n > budget_) return v;
    order_.emplace_front(key, v);
    index_[key] = order_.begin();
    used_ += n;
    while (used_ > budget_ && !order_.empty()) {
      used_ -= bytes(*order_.back().second);
      index_.erase(order_.back().first);
      order_.pop_back();
    }
    return v;
  }

 private:
  std::size_t budget_;
  std::size_t used_ = 0;
  std::list<std::pair<std::string, std::shared_ptr<const V>>> order_;
  std::unordered_map<std::string, typename decltype(order_)::iterator> index_;
  std::mutex mu_;
};

inline std::size_t speech_bytes(const SpeechFeatureSet& f) {
  return 4 * (f.stack.size() + f.mel.size() + f.phone_ids.size() + f.speaker_embedding.size());
}
inline std::size_t text_bytes(const TextFeatureSet& t) { return 4 * t.tokens.size(); }

class CachedFeatureSource final : public FeatureSource {
 public:
  CachedFeatureSource(FeatureCache cache, std::string speech_fp, std::string text_fp,
                      std::size_t budget_bytes = std::size_t{2} << 30)
      : cache_(std::move(cache)),
        speech_fp_(std::move(speech_fp)),
        text_fp_(std::move(text_fp)),
        speech_memo_(budget_bytes),
        text_memo_(budget_bytes / 8) {}

  std::shared_ptr<const SpeechFeatureSet> speech(const std::string& id) const override {
    return speech_memo_.get(id, &speech_bytes, [&] {
      auto f = SpeechFeatureSet::from_record(cache_.get(id, FeatureKind::kSpeech, speech_fp_));
      f.validate();
      return f;
    });
  }

  std::shared_ptr<const TextFeatureSet> text(const std::string& id) const override {
    return text_memo_.get(id, &text_bytes, [&] {
      return TextFeatureSet::from_record(cache_.get(id, FeatureKind::kText, text_fp_));
    });
  }

 private:
  FeatureCache cache_;
  std::string speech_fp_, text_fp_;
  mutable ByteLru<SpeechFeatureSet> speech_memo_;
  mutable ByteLru<TextFeatureSet> text_memo_;
};

}  // namespace emorec
