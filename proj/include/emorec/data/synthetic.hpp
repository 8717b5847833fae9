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

// Deterministic stand-in corpus. Every utterance has three independent latent
// factors: an emotion, a speaker and a per-frame phone. Features are fixed
// seeded Gaussian linear maps of their one-hot codes plus seeded noise:
//
//   layer l, frame t:  (E_l e + S_l s + P_l p_t) / sqrt(3) + n,  n ~ N(0, 1/snr)
//   log-mel frame t:   0.5 + 0.15 ((E' e + S' s + P' p_t) / sqrt(3) + n)
//   token k:           (T e + V w_k) / sqrt(2) + n
//
// Per-utterance features are materialized on demand from per-utterance
// random substreams, so a corpus far larger than memory is still
// reproducible bit for bit.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "emorec/common/rng.hpp"
#include "emorec/data/manifest.hpp"
#include "emorec/features/cache.hpp"
#include "emorec/features/feature_types.hpp"
#include "emorec/features/phones.hpp"
#include "json.hpp"

namespace emorec {

struct SyntheticCorpusConfig {
  int n_speakers = 4;
  int n_utterances_per_speaker = 16;
  int frames_per_utterance = 192;
  double factor_snr = 10.0;  // signal-to-noise power ratio; infinity disables noise
  std::uint64_t seed = 7;
  int feature_dim = kWav2vecDim;
  int text_dim = kTextDim;
  int min_tokens = 3;
  int max_tokens = 12;
  int vocabulary = 64;
  int min_phone_run = 3;
  int max_phone_run = 10;

  void validate() const {
    if (n_speakers < 2) throw UsageError("synthetic corpus needs at least 2 speakers");
    if (n_utterances_per_speaker < 1) throw UsageError("synthetic corpus needs utterances");
    if (frames_per_utterance < 96)
      throw UsageError("frames_per_utterance must be >= 96 to form one training segment");
    if (!(factor_snr > 0.0)) throw UsageError("factor_snr must be positive");
    if (feature_dim < 1 || text_dim < 1) throw UsageError("feature dimensions must be positive");
    if (min_tokens < 1 || max_tokens < min_tokens) throw UsageError("bad token count range");
    if (min_phone_run < 1 || max_phone_run < min_phone_run) throw UsageError("bad phone run range");
    if (vocabulary < 1) throw UsageError("vocabulary must be positive");
  }

  double noise_std() const { return std::isinf(factor_snr) ? 0.0 : 1.0 / std::sqrt(factor_snr); }

  nlohmann::json to_json() const {
    return {{"n_speakers", n_speakers},
            {"n_utterances_per_speaker", n_utterances_per_speaker},
            {"frames_per_utterance", frames_per_utterance},
            {"factor_snr", std::isinf(factor_snr) ? nlohmann::json("inf") : nlohmann::json(factor_snr)},
            {"seed", seed},
            {"feature_dim", feature_dim},
            {"text_dim", text_dim},
            {"min_tokens", min_tokens},
            {"max_tokens", max_tokens},
            {"vocabulary", vocabulary},
            {"min_phone_run", min_phone_run},
            {"max_phone_run", max_phone_run}};
  }

  std::string fingerprint() const { return "synthetic-v1:" + to_json().dump(); }
};

// Latent factors of one synthetic utterance.
struct SyntheticFactors {
  int speaker = 0;
  Emotion emotion = Emotion::kNeutral;
  std::vector<std::int32_t> phones;
  std::vector<int> words;
};

class SyntheticCorpus {
 public:
  explicit SyntheticCorpus(SyntheticCorpusConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build_maps();
    build_utterances();
  }

  const SyntheticCorpusConfig& config() const { return cfg_; }
  const Manifest& manifest() const { return manifest_; }
  const SyntheticFactors& factors(std::size_t i) const { return factors_.at(i); }
  std::size_t size() const { return manifest_.size(); }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < manifest_.size(); ++i)
      if (manifest_[i].utterance_id == id) return i;
    throw DataError("utterance " + id + " is not in the synthetic corpus");
  }

  static std::string speaker_name(int s) {
    char b[16];
    std::snprintf(b, sizeof(b), "spk%02d", s);
    return b;
  }
  static int session_of(int s) { return (s / 2) % 5 + 1; }

  SpeechFeatureSet speech(std::size_t i) const {
    const auto& u = manifest_.at(i);
    const auto& f = factors_.at(i);
    const std::int64_t T = cfg_.frames_per_utterance, D = cfg_.feature_dim;
    const double sd = cfg_.noise_std();
    const double k3 = 1.0 / std::sqrt(3.0);
    SpeechFeatureSet out;
    out.layers = kWav2vecLayers;
    out.frames = T;
    out.dim = D;
    out.stack.resize(static_cast<std::size_t>(kWav2vecLayers * T * D));
    Rng noise(cfg_.seed, "utt-noise/" + u.utterance_id);
    const int e = emotion_index(f.emotion);
    for (int l = 0; l < kWav2vecLayers; ++l) {
      const auto& m = layer_maps_[static_cast<std::size_t>(l)];
      for (std::int64_t t = 0; t < T; ++t) {
        float* dst = out.stack.data() + (l * T + t) * D;
        const int p = f.phones[static_cast<std::size_t>(t)];
        for (std::int64_t c = 0; c < D; ++c) {
          double v = (m.e(c, e) + m.s(c, f.speaker) + m.p(c, p)) * k3;
          if (sd > 0.0) v += sd * noise.normal();
          dst[c] = static_cast<float>(v);
        }
      }
    }
    out.mel_bins = kMelBins;
    out.mel.resize(static_cast<std::size_t>(T * kMelBins));
    Rng mel_noise(cfg_.seed, "utt-mel-noise/" + u.utterance_id);
    for (std::int64_t t = 0; t < T; ++t) {
      const int p = f.phones[static_cast<std::size_t>(t)];
      for (int b = 0; b < kMelBins; ++b) {
        double v = (mel_maps_.e(b, e) + mel_maps_.s(b, f.speaker) + mel_maps_.p(b, p)) * k3;
        if (sd > 0.0) v += sd * mel_noise.normal();
        out.mel[static_cast<std::size_t>(t * kMelBins + b)] = static_cast<float>(0.5 + 0.15 * v);
      }
    }
    out.phone_ids = f.phones;
    out.speaker_embedding = speaker_embeddings_[static_cast<std::size_t>(f.speaker)];
    return out;
  }

  TextFeatureSet text(std::size_t i) const {
    const auto& f = factors_.at(i);
    const std::int64_t D = cfg_.text_dim;
    const double sd = cfg_.noise_std();
    TextFeatureSet t;
    t.dim = D;
    t.n_tokens = static_cast<std::int64_t>(f.words.size());
    t.tokens.resize(static_cast<std::size_t>(t.n_tokens * D));
    Rng noise(cfg_.seed, "utt-text-noise/" + manifest_[i].utterance_id);
    const int e = emotion_index(f.emotion);
    const double k2 = 1.0 / std::sqrt(2.0);
    for (std::int64_t k = 0; k < t.n_tokens; ++k)
      for (std::int64_t c = 0; c < D; ++c) {
        double v = (text_emotion_(c, e) + vocab_(c, f.words[static_cast<std::size_t>(k)])) * k2;
        if (sd > 0.0) v += sd * noise.normal();
        t.tokens[static_cast<std::size_t>(k * D + c)] = static_cast<float>(v);
      }
    return t;
  }

 private:
  struct FactorMaps {
    Eigen::MatrixXd e, s, p;
  };

  static Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
    return m;
  }

  void build_maps() {
    Rng rng(cfg_.seed, "synthetic-maps");
    const Eigen::Index D = cfg_.feature_dim;
    for (int l = 0; l < kWav2vecLayers; ++l)
      layer_maps_.push_back(FactorMaps{gaussian(D, kNumEmotions, rng), gaussian(D, cfg_.n_speakers, rng),
                                       gaussian(D, kNumPhoneIds, rng)});
    mel_maps_ = FactorMaps{gaussian(kMelBins, kNumEmotions, rng), gaussian(kMelBins, cfg_.n_speakers, rng),
                           gaussian(kMelBins, kNumPhoneIds, rng)};
    text_emotion_ = gaussian(cfg_.text_dim, kNumEmotions, rng);
    vocab_ = gaussian(cfg_.text_dim, cfg_.vocabulary, rng);
    for (int s = 0; s < cfg_.n_speakers; ++s) {
      std::vector<float> v(kSpeakerDim);
      double n2 = 0.0;
      std::vector<double> raw(kSpeakerDim);
      for (auto& x : raw) {
        x = rng.normal();
        n2 += x * x;
      }
      for (int k = 0; k < kSpeakerDim; ++k)
        v[static_cast<std::size_t>(k)] = static_cast<float>(raw[static_cast<std::size_t>(k)] / std::sqrt(n2));
      speaker_embeddings_.push_back(std::move(v));
    }
  }

  void build_utterances() {
    const int n = cfg_.n_utterances_per_speaker;
    for (int s = 0; s < cfg_.n_speakers; ++s) {
      std::vector<int> emotions(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) emotions[static_cast<std::size_t>(j)] = (j + s) % kNumEmotions;
      Rng shuffle(cfg_.seed, "synthetic-emotions/" + speaker_name(s));
      std::shuffle(emotions.begin(), emotions.end(), shuffle.engine());
      for (int j = 0; j < n; ++j) {
        UtteranceRecord r;
        char id[32];
        std::snprintf(id, sizeof(id), "%s_u%04d", speaker_name(s).c_str(), j);
        r.utterance_id = id;
        r.session = session_of(s);
        r.speaker_id = speaker_name(s);
        r.audio_path = "synthetic://" + r.utterance_id;
        r.emotion = emotion_from_index(emotions[static_cast<std::size_t>(j)]);
        r.duration_s = cfg_.frames_per_utterance * 0.02;

        SyntheticFactors f;
        f.speaker = s;
        f.emotion = r.emotion;
        Rng pr(cfg_.seed, "utt-phones/" + r.utterance_id);
        while (static_cast<int>(f.phones.size()) < cfg_.frames_per_utterance) {
          const auto run = pr.uniform_int(cfg_.min_phone_run, cfg_.max_phone_run);
          // ids 0 and 2..40: silence and the ARPAbet phones
          auto id_p = static_cast<std::int32_t>(pr.uniform_int(1, 40));
          if (id_p == 1) id_p = PhoneInventory::kSilence;
          for (std::int64_t k = 0; k < run && static_cast<int>(f.phones.size()) < cfg_.frames_per_utterance; ++k)
            f.phones.push_back(id_p);
        }
        Rng tr(cfg_.seed, "utt-words/" + r.utterance_id);
        const auto n_tok = tr.uniform_int(cfg_.min_tokens, cfg_.max_tokens);
        for (std::int64_t k = 0; k < n_tok; ++k) {
          const int w = static_cast<int>(tr.uniform_int(0, cfg_.vocabulary - 1));
          f.words.push_back(w);
          r.transcript += (k ? " w" : "w") + std::to_string(w);
        }
        manifest_.push_back(std::move(r));
        factors_.push_back(std::move(f));
      }
    }
  }

  SyntheticCorpusConfig cfg_;
  std::vector<FactorMaps> layer_maps_;
  FactorMaps mel_maps_;
  Eigen::MatrixXd text_emotion_, vocab_;
  std::vector<std::vector<float>> speaker_embeddings_;
  Manifest manifest_;
  std::vector<SyntheticFactors> factors_;
};

// FeatureSource over a synthetic corpus, memoizing materialized utterances.
class SyntheticFeatureSource final : public FeatureSource {
 public:
  explicit SyntheticFeatureSource(std::shared_ptr<const SyntheticCorpus> corpus,
                                  std::size_t budget_bytes = std::size_t{2} << 30)
      : corpus_(std::move(corpus)), speech_memo_(budget_bytes), text_memo_(budget_bytes / 8) {
    for (std::size_t i = 0; i < corpus_->size(); ++i) index_[corpus_->manifest()[i].utterance_id] = i;
  }

  std::shared_ptr<const SpeechFeatureSet> speech(const std::string& id) const override {
    const std::size_t i = lookup(id);
    return speech_memo_.get(id, &speech_bytes, [&] { return corpus_->speech(i); });
  }
  std::shared_ptr<const TextFeatureSet> text(const std::string& id) const override {
    const std::size_t i = lookup(id);
    return text_memo_.get(id, &text_bytes, [&] { return corpus_->text(i); });
  }

  const SyntheticCorpus& corpus() const { return *corpus_; }

 private:
  std::size_t lookup(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("utterance " + id + " is not in the synthetic corpus");
    return it->second;
  }

  std::shared_ptr<const SyntheticCorpus> corpus_;
  std::unordered_map<std::string, std::size_t> index_;
  mutable ByteLru<SpeechFeatureSet> speech_memo_;
  mutable ByteLru<TextFeatureSet> text_memo_;
};

}  // namespace emorec
