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

#include <vector>

#include "emorec/data/probs.hpp"
#include "emorec/ser/batch.hpp"

namespace emorec::ser {

// Softmax of one segment's logits, evaluated alone (batch of one).
template <class T>
EmotionProbs segment_probs(const SerModel<T>& model, const SpeechFeatureSet& f, std::int64_t start) {
  const SegmentBatch<T> b = build_batch<T>({SegmentRef{&f, start, 0}}, MelNormalizer{}, model.architecture());
  const Mat<T> p = nn::softmax(model.classify(model.encode(b), 1));
  EmotionProbs e;
  for (int k = 0; k < kNumEmotions; ++k) e.p[static_cast<std::size_t>(k)] = static_cast<double>(p(k, 0));
  return e;
}

// Utterance-level probabilities: the mean of the softmax outputs of all
// consecutive 96-frame segments (the last one zero-padded).
template <class T>
EmotionProbs infer_utterance(const SerModel<T>& model, const SpeechFeatureSet& f) {
  const auto starts = segment_starts(f.frames);
  if (starts.size() == 1) return segment_probs(model, f, 0);
  EmotionProbs acc;
  for (auto s : starts) {
    const EmotionProbs e = segment_probs(model, f, s);
    for (int k = 0; k < kNumEmotions; ++k) acc.p[static_cast<std::size_t>(k)] += e.p[static_cast<std::size_t>(k)];
  }
  for (double& v : acc.p) v /= static_cast<double>(starts.size());
  return acc;
}

// Utterance-level code vector: temporal mean of each segment's bottleneck
// codes, then the mean over segments (width 2d).
template <class T>
std::vector<double> utterance_code(const SerModel<T>& model, const SpeechFeatureSet& f) {
  const auto starts = segment_starts(f.frames);
  const Index w = model.bottleneck().code_width();
  Vec<double> acc = Vec<double>::Zero(w);
  for (auto s : starts) {
    const SegmentBatch<T> b = build_batch<T>({SegmentRef{&f, s, 0}}, MelNormalizer{}, model.architecture());
    const Mat<T> codes = model.encode(b);
    acc += nn::time_mean(codes, nn::SeqShape{1, codes.cols()}).col(0).template cast<double>();
  }
  acc /= static_cast<double>(starts.size());
  return std::vector<double>(acc.data(), acc.data() + w);
}

}  // namespace emorec::ser
