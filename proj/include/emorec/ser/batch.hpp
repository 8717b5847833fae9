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
#include <cstdint>
#include <vector>

#include "emorec/features/feature_types.hpp"
#include "emorec/features/mel.hpp"
#include "emorec/ser/model.hpp"

namespace emorec::ser {

// A 96-frame window [start, start + 96) of one utterance; frames past the
// end of the utterance are zero (silence for phone ids).
struct SegmentRef {
  const SpeechFeatureSet* features = nullptr;
  std::int64_t start = 0;
  int label = 0;
};

template <class T>
SegmentBatch<T> build_batch(const std::vector<SegmentRef>& refs, const MelNormalizer& mel_norm,
                            const SerArchitecture& arch) {
  SegmentBatch<T> b;
  b.batch = static_cast<Index>(refs.size());
  const Index B = b.batch, n = B * kSegmentFrames;
  b.layers.assign(static_cast<std::size_t>(arch.layers), Mat<T>::Zero(arch.feature_dim, n));
  b.speaker.resize(arch.speaker_dim, B);
  b.mel_target = Mat<T>::Zero(arch.mel_bins, n);
  b.phone_ids.assign(static_cast<std::size_t>(n), PhoneInventory::kSilence);
  for (Index j = 0; j < B; ++j) {
    const SegmentRef& r = refs[static_cast<std::size_t>(j)];
    const SpeechFeatureSet& f = *r.features;
    if (f.layers != arch.layers || f.dim != arch.feature_dim || f.mel_bins != arch.mel_bins)
      throw UsageError("speech features do not match the model input sizes");
    if (r.start < 0 || r.start >= f.frames) throw UsageError("segment start outside the utterance");
    const Index valid = std::min<Index>(kSegmentFrames, f.frames - r.start);
    for (Index l = 0; l < arch.layers; ++l) {
      const float* src = f.stack.data() + (l * f.frames + r.start) * f.dim;
      Mat<T>& dst = b.layers[static_cast<std::size_t>(l)];
      for (Index t = 0; t < valid; ++t)
        dst.col(t * B + j) =
            Eigen::Map<const Eigen::VectorXf>(src + t * f.dim, f.dim).template cast<T>();
    }
    for (Index t = 0; t < valid; ++t) {
      const float* m = f.mel.data() + (r.start + t) * f.mel_bins;
      for (Index k = 0; k < arch.mel_bins; ++k) b.mel_target(k, t * B + j) = static_cast<T>(mel_norm.apply(m[k]));
      b.phone_ids[static_cast<std::size_t>(t * B + j)] = f.phone_ids[static_cast<std::size_t>(r.start + t)];
    }
    b.speaker.col(j) =
        Eigen::Map<const Eigen::VectorXf>(f.speaker_embedding.data(), arch.speaker_dim).template cast<T>();
    b.labels.push_back(r.label);
  }
  return b;
}

// Consecutive non-overlapping segment starts covering all frames.
inline std::vector<std::int64_t> segment_starts(std::int64_t frames) {
  std::vector<std::int64_t> s;
  for (std::int64_t t = 0; t < std::max<std::int64_t>(frames, 1); t += kSegmentFrames) s.push_back(t);
  return s;
}

}  // namespace emorec::ser
