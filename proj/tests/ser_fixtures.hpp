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

#include "emorec/ser/batch.hpp"
#include "grad_check.hpp"

namespace emorec::testing {

inline ser::SerArchitecture tiny_arch() {
  ser::SerArchitecture a;
  a.layers = 3;
  a.feature_dim = 4;
  a.speaker_dim = 3;
  a.mel_bins = 5;
  a.n_phone_ids = 6;
  a.kernel = 3;
  a.prenet_blocks = 1;
  a.prenet_filters = 4;
  a.encoder_blstm_layers = 2;
  a.phone_dim = 3;
  a.decoder_blocks = 1;
  a.decoder_filters = 4;
  a.decoder_lstm_layers = 1;
  a.decoder_lstm_units = 3;
  a.postnet_blocks = 2;
  a.postnet_filters = 4;
  a.classifier_hidden = 5;
  return a;
}

template <class T>
ser::SegmentBatch<T> random_batch(const ser::SerArchitecture& a, Eigen::Index batch, Rng& rng) {
  ser::SegmentBatch<T> b;
  b.batch = batch;
  const Eigen::Index n = batch * ser::kSegmentFrames;
  for (int l = 0; l < a.layers; ++l) b.layers.push_back(random_mat(a.feature_dim, n, rng).cast<T>());
  b.speaker = random_mat(a.speaker_dim, batch, rng).cast<T>();
  b.mel_target = random_mat(a.mel_bins, n, rng, 0.3).cast<T>();
  for (Eigen::Index k = 0; k < n; ++k)
    b.phone_ids.push_back(static_cast<std::int32_t>(rng.uniform_int(0, a.n_phone_ids - 1)));
  for (Eigen::Index j = 0; j < batch; ++j) b.labels.push_back(static_cast<int>(rng.uniform_int(0, 3)));
  return b;
}

template <class T>
ser::SegmentBatch<T> zero_batch(const ser::SerArchitecture& a, Eigen::Index batch) {
  ser::SegmentBatch<T> b;
  b.batch = batch;
  const Eigen::Index n = batch * ser::kSegmentFrames;
  b.layers.assign(static_cast<std::size_t>(a.layers), nn::Mat<T>::Zero(a.feature_dim, n));
  b.speaker = nn::Mat<T>::Zero(a.speaker_dim, batch);
  b.mel_target = nn::Mat<T>::Zero(a.mel_bins, n);
  b.phone_ids.assign(static_cast<std::size_t>(n), 0);
  b.labels.assign(static_cast<std::size_t>(batch), 0);
  return b;
}

// Features sized for `a` (not the full-size validation contract).
inline SpeechFeatureSet random_features(const ser::SerArchitecture& a, std::int64_t frames, Rng& rng) {
  SpeechFeatureSet f;
  f.layers = a.layers;
  f.frames = frames;
  f.dim = a.feature_dim;
  f.mel_bins = a.mel_bins;
  f.stack.resize(static_cast<std::size_t>(a.layers * frames * a.feature_dim));
  for (auto& v : f.stack) v = static_cast<float>(rng.normal());
  f.mel.resize(static_cast<std::size_t>(frames * a.mel_bins));
  for (auto& v : f.mel) v = static_cast<float>(rng.uniform());
  for (std::int64_t t = 0; t < frames; ++t)
    f.phone_ids.push_back(static_cast<std::int32_t>(rng.uniform_int(0, a.n_phone_ids - 1)));
  f.speaker_embedding.resize(static_cast<std::size_t>(a.speaker_dim));
  for (auto& v : f.speaker_embedding) v = static_cast<float>(rng.normal());
  return f;
}

inline SpeechFeatureSet slice_frames(const SpeechFeatureSet& f, std::int64_t start, std::int64_t n) {
  SpeechFeatureSet s = f;
  s.frames = n;
  s.stack.clear();
  for (std::int64_t l = 0; l < f.layers; ++l)
    s.stack.insert(s.stack.end(), f.stack.begin() + (l * f.frames + start) * f.dim,
                   f.stack.begin() + (l * f.frames + start + n) * f.dim);
  s.mel.assign(f.mel.begin() + start * f.mel_bins, f.mel.begin() + (start + n) * f.mel_bins);
  s.phone_ids.assign(f.phone_ids.begin() + start, f.phone_ids.begin() + start + n);
  return s;
}

}  // namespace emorec::testing
