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

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "emorec/common/error.hpp"
#include "emorec/features/array_record.hpp"

namespace emorec {

inline constexpr int kWav2vecLayers = 25;
inline constexpr int kWav2vecDim = 1024;
inline constexpr int kMelBins = 80;
inline constexpr int kSpeakerDim = 256;
inline constexpr int kTextDim = 1024;
inline constexpr int kNumPhoneIds = 128;

using ConstColMap = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>>;

// Per-utterance speech inputs. All per-frame arrays share `frames`.
struct SpeechFeatureSet {
  std::int64_t layers = kWav2vecLayers;
  std::int64_t frames = 0;
  std::int64_t dim = kWav2vecDim;
  std::vector<float> stack;              // [layers, frames, dim], row-major
  std::vector<float> mel;                // [frames, mel_bins], row-major
  std::int64_t mel_bins = kMelBins;
  std::vector<std::int32_t> phone_ids;   // [frames]
  std::vector<float> speaker_embedding;  // [256], unit norm

  // Layer l as a column-major [dim, frames] view: column t is frame t.
  ConstColMap layer(std::int64_t l) const {
    return ConstColMap(stack.data() + l * frames * dim, dim, frames);
  }
  // Mel as a column-major [mel_bins, frames] view.
  ConstColMap mel_frames() const { return ConstColMap(mel.data(), mel_bins, frames); }

  void validate() const {
    auto fail = [](const std::string& w) { throw DataError("invalid speech features: " + w); };
    if (frames < 1) fail("no frames");
    if (static_cast<std::int64_t>(stack.size()) != layers * frames * dim) fail("stack size");
    if (static_cast<std::int64_t>(mel.size()) != frames * mel_bins) fail("mel frame count");
    if (static_cast<std::int64_t>(phone_ids.size()) != frames) fail("phone frame count");
    for (auto p : phone_ids)
      if (p < 0 || p >= kNumPhoneIds) fail("phone id out of range");
    if (speaker_embedding.size() != kSpeakerDim) fail("speaker embedding size");
    double n2 = 0.0;
    for (float v : speaker_embedding) n2 += double(v) * v;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-4) fail("speaker embedding is not unit norm");
  }

  // Drops trailing frames so every per-frame array has `t` frames.
  void truncate(std::int64_t t) {
    if (t >= frames) return;
    std::vector<float> s(static_cast<std::size_t>(layers * t * dim));
    for (std::int64_t l = 0; l < layers; ++l)
      std::copy_n(stack.begin() + l * frames * dim, t * dim, s.begin() + l * t * dim);
    stack = std::move(s);
    mel.resize(static_cast<std::size_t>(t * mel_bins));
    phone_ids.resize(static_cast<std::size_t>(t));
    frames = t;
  }

  ArrayRecord to_record(std::string fingerprint) const {
    ArrayRecord r;
    r.fingerprint = std::move(fingerprint);
    r.arrays.push_back(NamedArray::floats("wav2vec_stack", {layers, frames, dim}, stack));
    r.arrays.push_back(NamedArray::floats("mel", {frames, mel_bins}, mel));
    r.arrays.push_back(NamedArray::ints("phone_ids", {frames}, phone_ids));
    r.arrays.push_back(NamedArray::floats("speaker_embedding", {kSpeakerDim}, speaker_embedding));
    return r;
  }

  static SpeechFeatureSet from_record(const ArrayRecord& r) {
    SpeechFeatureSet f;
    const auto& st = r.at("wav2vec_stack");
    const auto& mel = r.at("mel");
    if (st.shape.size() != 3 || mel.shape.size() != 2)
      throw CacheError(CacheError::Kind::kCorrupt, "speech record has wrong array ranks");
    f.layers = st.shape[0];
    f.frames = st.shape[1];
    f.dim = st.shape[2];
    f.stack = st.f32;
    f.mel_bins = mel.shape[1];
    f.mel = mel.f32;
    f.phone_ids = r.at("phone_ids").i32;
    f.speaker_embedding = r.at("speaker_embedding").f32;
    return f;
  }
};

// Token embeddings of one transcript, special tokens excluded.
struct TextFeatureSet {
  std::int64_t n_tokens = 0;
  std::int64_t dim = kTextDim;
  std::vector<float> tokens;  // [n_tokens, dim], row-major
  bool empty_transcript = false;

  ArrayRecord to_record(std::string fingerprint) const {
    ArrayRecord r;
    r.fingerprint = std::move(fingerprint);
    r.metadata["empty_transcript"] = empty_transcript;
    r.arrays.push_back(NamedArray::floats("tokens", {n_tokens, dim}, tokens));
    return r;
  }

  static TextFeatureSet from_record(const ArrayRecord& r) {
    TextFeatureSet t;
    const auto& a = r.at("tokens");
    if (a.shape.size() != 2) throw CacheError(CacheError::Kind::kCorrupt, "text record rank");
    t.n_tokens = a.shape[0];
    t.dim = a.shape[1];
    t.tokens = a.f32;
    t.empty_transcript = r.metadata.value("empty_transcript", false);
    return t;
  }
};

// Token matrix zero-padded (or truncated) to a fixed row count.
struct PaddedTokens {
  std::int64_t rows = 0;   // N'
  std::int64_t valid = 0;  // min(N, N')
  std::int64_t dim = kTextDim;
  bool truncated = false;
  std::vector<float> data;  // [rows, dim], row-major; rows >= valid are zero
};

inline PaddedTokens pad_tokens(const TextFeatureSet& t, std::int64_t max_tokens) {
  if (max_tokens < 1) throw UsageError("max token count must be >= 1");
  PaddedTokens p;
  p.rows = max_tokens;
  p.dim = t.dim;
  p.valid = std::min(t.n_tokens, max_tokens);
  p.truncated = t.n_tokens > max_tokens;
  p.data.assign(static_cast<std::size_t>(max_tokens * t.dim), 0.0f);
  std::copy_n(t.tokens.begin(), p.valid * t.dim, p.data.begin());
  return p;
}

}  // namespace emorec
