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
#include <cmath>
#include <string>

#include "emorec/data/emotion.hpp"

namespace emorec {

// Scores over {Angry, Neutral, Sad, Happy}. Model outputs are probability
// vectors; fused scores are weighted sums and carry normalized = false.
struct EmotionProbs {
  std::array<double, kNumEmotions> p{};
  bool normalized = true;

  // First maximum wins, so ties resolve to the lower class index.
  int argmax() const {
    int best = 0;
    for (int i = 1; i < kNumEmotions; ++i)
      if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)]) best = i;
    return best;
  }

  double sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }

  void validate(double tol = 1e-6) const {
    for (double v : p)
      if (!(v >= 0.0) || !std::isfinite(v)) throw DataError("emotion scores must be finite and >= 0");
    if (normalized && std::abs(sum() - 1.0) > tol)
      throw DataError("emotion probabilities sum to " + std::to_string(sum()));
  }

  EmotionProbs normalized_view() const {
    EmotionProbs q = *this;
    const double s = sum();
    if (s > 0.0)
      for (double& v : q.p) v /= s;
    q.normalized = true;
    return q;
  }
};

}  // namespace emorec
