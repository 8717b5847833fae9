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

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "emorec/data/folds.hpp"
#include "emorec/data/iemocap.hpp"
#include "emorec/features/cache.hpp"
#include "emorec/features/extract.hpp"
#include "emorec/features/wav.hpp"
#include "emorec/pipeline/config.hpp"
#include "emorec/pipeline/log.hpp"

namespace emorec::pipeline {

inline Manifest corpus_manifest(const PipelineConfig& c) {
  if (c.corpus == "synthetic") return SyntheticCorpus(c.synthetic).manifest();
  if (c.iemocap_root.empty()) throw UsageError("corpus.iemocap_root is not set");
  if (!fs::is_directory(c.iemocap_root)) throw DataError("IEMOCAP root " + c.iemocap_root.string() + " does not exist");
  return build_manifest(read_iemocap(c.iemocap_root), c.label_policy);
}

// Session folds when all five sessions are present; otherwise a single
// all-data fold 0 (small synthetic corpora).
inline void write_fold_files(const PipelineConfig& c, const Manifest& m, const Logger& log) {
  std::set<int> sessions;
  for (const auto& r : m) sessions.insert(r.session);
  if (sessions.size() == static_cast<std::size_t>(kNumSessions)) {
    write_folds(c.folds_path(), make_session_folds(m));
    write_folds(c.probe_folds_path(), make_probe_folds(m, c.seed));
  } else {
    log.warn("corpus covers " + std::to_string(sessions.size()) +
             " of 5 sessions; writing only the all-data fold 0");
    write_folds(c.folds_path(), {make_full_fold(m)});
    std::error_code ec;
    fs::remove(c.probe_folds_path(), ec);
  }
}

struct ExtractStats {
  std::size_t records = 0;  // speech + text records considered
  std::size_t skipped = 0;
  std::size_t extracted = 0;
  std::vector<std::string> corrupt;  // "<id> (<kind>)" re-extracted after a failed read
  std::vector<std::string> stale;
};

namespace detail {

class SpeechExtractor {
 public:
  SpeechExtractor(const PipelineConfig& c, const ModelClients& m, const Manifest& manifest, const Logger& log)
      : cfg_(c), clients_(m), log_(log) {
    for (const auto& r : manifest) {
      by_id_[r.utterance_id] = &r;
      by_speaker_[r.speaker_id].push_back(r.utterance_id);
    }
  }

  SpeechFeatureSet extract(const UtteranceRecord& r) {
    const Waveform w = load(r.utterance_id);
    LayerStack stack = extract_wav2vec_stack(w.samples, *clients_.wav2vec);
    auto mel = compute_log_mel(w.samples);
    return assemble_speech_features(std::move(stack), std::move(mel), alignment(r.utterance_id),
                                    speaker(r.speaker_id));
  }

 private:
  Waveform load(const std::string& id) const { return read_wav_16k(by_id_.at(id)->audio_path); }

  PhoneAlignment alignment(const std::string& id) const {
    if (cfg_.alignments.empty()) return {};
    for (const char* ext : {".json", ".txt"}) {
      const auto p = cfg_.alignments / (id + ext);
      if (fs::exists(p)) return read_alignment(p);
    }
    log_.warn("no alignment for " + id + "; using the silence phone");
    return {};
  }

  const std::vector<float>& speaker(const std::string& spk) {
    auto it = speakers_.find(spk);
    if (it == speakers_.end()) {
      auto e = speaker_embedding(
          spk, by_speaker_.at(spk), [&](const std::string& id) { return load(id); }, *clients_.speaker, cfg_.seed);
      it = speakers_.emplace(spk, std::move(e)).first;
    }
    return it->second;
  }

  const PipelineConfig& cfg_;
  const ModelClients& clients_;
  const Logger& log_;
  std::map<std::string, const UtteranceRecord*> by_id_;
  std::map<std::string, std::vector<std::string>> by_speaker_;
  std::map<std::string, std::vector<float>> speakers_;
};

}  // namespace detail

// Fills the feature cache for every manifest utterance. Records whose
// fingerprint matches are skipped; missing, stale and unreadable records are
// (re)built. Each record is written atomically, so a failure part-way leaves
// every completed record in place.
inline ExtractStats run_extract(const PipelineConfig& c, const ModelClients& clients, const Logger& log) {
  const Manifest m = corpus_manifest(c);
  write_manifest(c.manifest_path(), m);
  write_fold_files(c, m, log);

  const FeatureCache cache(c.cache_dir);
  fs::create_directories(c.cache_dir);
  const std::string speech_fp = speech_fingerprint(c, clients), text_fp = text_fingerprint(c, clients);
  std::unique_ptr<SyntheticCorpus> synth;
  if (c.corpus == "synthetic") synth = std::make_unique<SyntheticCorpus>(c.synthetic);
  detail::SpeechExtractor speech(c, clients, m, log);

  ExtractStats st;
  auto needs = [&](const std::string& id, FeatureKind kind, const std::string& fp) {
    ++st.records;
    try {
      cache.get(id, kind, fp);
      ++st.skipped;
      return false;
    } catch (const CacheError& e) {
      const std::string tag = id + " (" + feature_kind_name(kind) + ")";
      if (e.kind() == CacheError::Kind::kCorrupt || e.kind() == CacheError::Kind::kIo) {
        log.warn("corrupt cache record " + tag + ": " + e.what() + "; re-extracting");
        st.corrupt.push_back(tag);
      } else if (e.kind() == CacheError::Kind::kStale) {
        st.stale.push_back(tag);
      }
      return true;
    }
  };

  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& r = m[i];
    if (needs(r.utterance_id, FeatureKind::kSpeech, speech_fp)) {
      const SpeechFeatureSet f = synth ? synth->speech(i) : speech.extract(r);
      cache.put(r.utterance_id, FeatureKind::kSpeech, f.to_record(speech_fp));
      ++st.extracted;
    }
    if (needs(r.utterance_id, FeatureKind::kText, text_fp)) {
      const TextFeatureSet t = synth ? synth->text(i) : extract_text_tokens(r.transcript, *clients.text);
      cache.put(r.utterance_id, FeatureKind::kText, t.to_record(text_fp));
      ++st.extracted;
    }
  }
  log.info("extract: " + std::to_string(st.records) + " records, " + std::to_string(st.extracted) + " extracted, " +
           std::to_string(st.skipped) + " up to date");
  return st;
}

// Feature source over the cache for the configured extractors.
inline CachedFeatureSource open_features(const PipelineConfig& c) {
  const ModelClients m = make_clients(c);
  return CachedFeatureSource(FeatureCache(c.cache_dir), speech_fingerprint(c, m), text_fingerprint(c, m));
}

}  // namespace emorec::pipeline
