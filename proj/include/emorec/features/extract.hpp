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
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "emorec/common/rng.hpp"
#include "emorec/features/mel.hpp"
#include "emorec/features/model_clients.hpp"
#include "emorec/features/phones.hpp"
#include "emorec/features/wav.hpp"

namespace emorec {

inline LayerStack extract_wav2vec_stack(std::span<const float> wave, const Wav2vecClient& client) {
  if (wave.size() < static_cast<std::size_t>(kW2vWindow))
    throw DataError("waveform shorter than 25 ms (" + std::to_string(wave.size()) + " samples)");
  LayerStack s = client.infer(wave);
  if (s.layers != kWav2vecLayers || s.frames < 1 ||
      static_cast<std::int64_t>(s.data.size()) != s.layers * s.frames * s.dim)
    throw ModelClientError(client.fingerprint() + " returned a malformed layer stack");
  for (float v : s.data)
    if (!std::isfinite(v)) throw ModelClientError(client.fingerprint() + " returned non-finite values");
  return s;
}

// Averages the per-utterance embeddings of min(100, n) utterances drawn
// without replacement (seeded by the speaker id) and renormalizes to unit L2.
inline std::vector<float> speaker_embedding(
    const std::string& speaker_id, std::vector<std::string> utterance_ids,
    const std::function<Waveform(const std::string&)>& load, const SpeakerVerifierClient& client,
    std::uint64_t seed, std::size_t max_utterances = 100) {
  if (utterance_ids.empty()) throw DataError("speaker " + speaker_id + " has no utterances");
  std::sort(utterance_ids.begin(), utterance_ids.end());
  Rng rng(seed, "speaker-embedding/" + speaker_id);
  std::shuffle(utterance_ids.begin(), utterance_ids.end(), rng.engine());
  utterance_ids.resize(std::min(max_utterances, utterance_ids.size()));
  std::vector<double> acc(kSpeakerDim, 0.0);
  for (const auto& id : utterance_ids) {
    const Waveform w = load(id);
    const auto e = client.embed(w.samples);
    if (e.size() != kSpeakerDim)
      throw ModelClientError(client.fingerprint() + " returned a " + std::to_string(e.size()) +
                             "-dim embedding");
    for (std::size_t i = 0; i < e.size(); ++i) acc[i] += e[i];
  }
  double n2 = 0.0;
  for (double& v : acc) {
    v /= static_cast<double>(utterance_ids.size());
    n2 += v * v;
  }
  if (!(n2 > 0.0)) throw ModelClientError("speaker " + speaker_id + " has a zero mean embedding");
  std::vector<float> out(kSpeakerDim);
  const double inv = 1.0 / std::sqrt(n2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(acc[i] * inv);
  return out;
}

// An empty (or whitespace-only) transcript yields one all-zero token row.
inline TextFeatureSet extract_text_tokens(const std::string& transcript, const TextModelClient& client) {
  TextFeatureSet t;
  if (trim(transcript).empty()) {
    t.n_tokens = 1;
    t.tokens.assign(static_cast<std::size_t>(t.dim), 0.0f);
    t.empty_transcript = true;
    return t;
  }
  t = client.embed(transcript);
  if (t.n_tokens < 1 || static_cast<std::int64_t>(t.tokens.size()) != t.n_tokens * t.dim)
    throw ModelClientError(client.fingerprint() + " returned a malformed token matrix");
  return t;
}

// Assembles the per-frame arrays of one utterance and truncates them to the
// shorter of the wav2vec and mel framings. The mel is stored before corpus
// normalization, which is fitted later on the training fold.
inline SpeechFeatureSet assemble_speech_features(LayerStack stack, std::vector<float> log_mel,
                                                 const PhoneAlignment& alignment,
                                                 std::vector<float> speaker) {
  SpeechFeatureSet f;
  f.layers = stack.layers;
  f.frames = stack.frames;
  f.dim = stack.dim;
  f.stack = std::move(stack.data);
  f.mel_bins = kMelBins;
  f.mel = std::move(log_mel);
  const std::int64_t mel_frames = static_cast<std::int64_t>(f.mel.size()) / kMelBins;
  const std::int64_t t = std::min(f.frames, mel_frames);
  if (mel_frames > t) f.mel.resize(static_cast<std::size_t>(t * kMelBins));
  f.phone_ids = phone_sequence(alignment, f.frames);
  f.truncate(t);
  f.speaker_embedding = std::move(speaker);
  f.validate();
  return f;
}

// N': the longest token count over the training utterances only.
inline std::int64_t max_token_count(const std::vector<std::string>& train_ids,
                                    const std::function<std::int64_t(const std::string&)>& n_tokens) {
  std::int64_t n = 0;
  for (const auto& id : train_ids) n = std::max(n, n_tokens(id));
  if (n < 1) throw DataError("no training tokens to size the text input");
  return n;
}

}  // namespace emorec
