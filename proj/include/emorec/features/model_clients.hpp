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

// Interfaces to the pretrained models the pipeline consumes, plus seeded
// deterministic stubs. Implementations must be safe for concurrent calls.

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emorec/common/error.hpp"
#include "emorec/common/hash.hpp"
#include "emorec/common/rng.hpp"
#include "emorec/features/feature_types.hpp"

namespace emorec {

// [layers, frames, dim] row-major, as produced by a wav2vec 2.0 runtime.
struct LayerStack {
  std::int64_t layers = 0;
  std::int64_t frames = 0;
  std::int64_t dim = 0;
  std::vector<float> data;
};

class Wav2vecClient {
 public:
  virtual ~Wav2vecClient() = default;
  virtual std::string fingerprint() const = 0;
  // Row 0 is the CNN feature encoder output, rows 1..24 the transformer layers.
  virtual LayerStack infer(std::span<const float> wave16k) const = 0;
};

class SpeakerVerifierClient {
 public:
  virtual ~SpeakerVerifierClient() = default;
  virtual std::string fingerprint() const = 0;
  virtual std::vector<float> embed(std::span<const float> wave16k) const = 0;
};

class TextModelClient {
 public:
  virtual ~TextModelClient() = default;
  virtual std::string fingerprint() const = 0;
  // Last-layer embeddings of the non-special tokens, [n, dim] row-major.
  virtual TextFeatureSet embed(const std::string& transcript) const = 0;
};

// wav2vec 2.0 framing: a 25 ms receptive field advanced by 20 ms.
inline constexpr std::int64_t kW2vWindow = 400;
inline constexpr std::int64_t kW2vHop = 320;

inline std::int64_t wav2vec_frame_count(std::size_t samples) {
  if (samples < static_cast<std::size_t>(kW2vWindow)) return 0;
  return (static_cast<std::int64_t>(samples) - kW2vWindow) / kW2vHop + 1;
}

// h_l[t] = (1 + l / 24) * P x_t, where x_t is the 400-sample window of frame
// t. In identity mode P[c][k] = 1 iff c mod 400 == k (channel c copies
// sample c mod 400 of the window); otherwise P is seeded N(0, 1/400).
class StubWav2vecClient final : public Wav2vecClient {
 public:
  explicit StubWav2vecClient(std::uint64_t seed = 0, bool identity = false,
                             std::int64_t dim = kWav2vecDim)
      : seed_(seed), identity_(identity), dim_(dim) {
    if (!identity_) {
      Rng rng(seed, "stub-wav2vec");
      proj_.resize(static_cast<std::size_t>(dim_ * kW2vWindow));
      for (auto& v : proj_) v = static_cast<float>(rng.normal(0.0, 1.0 / 20.0));
    }
  }

  std::string fingerprint() const override {
    return "stub-wav2vec(seed=" + std::to_string(seed_) + ",identity=" +
           std::to_string(identity_) + ",dim=" + std::to_string(dim_) + ")";
  }

  LayerStack infer(std::span<const float> wave) const override {
    LayerStack s;
    s.layers = kWav2vecLayers;
    s.frames = wav2vec_frame_count(wave.size());
    s.dim = dim_;
    s.data.assign(static_cast<std::size_t>(s.layers * s.frames * s.dim), 0.0f);
    for (std::int64_t t = 0; t < s.frames; ++t) {
      const float* x = wave.data() + t * kW2vHop;
      for (std::int64_t c = 0; c < dim_; ++c) {
        float base;
        if (identity_) {
          base = x[c % kW2vWindow];
        } else {
          const float* row = proj_.data() + c * kW2vWindow;
          double acc = 0.0;
          for (std::int64_t k = 0; k < kW2vWindow; ++k) acc += double(row[k]) * x[k];
          base = static_cast<float>(acc);
        }
        for (std::int64_t l = 0; l < s.layers; ++l)
          s.data[static_cast<std::size_t>((l * s.frames + t) * dim_ + c)] =
              (1.0f + static_cast<float>(l) / 24.0f) * base;
      }
    }
    return s;
  }

 private:
  std::uint64_t seed_;
  bool identity_;
  std::int64_t dim_;
  std::vector<float> proj_;
};

// e = normalize(mean_t (Q x_t)^2) with a seeded [256, 400] Q over 20 ms-hop
// windows; louder and spectrally different inputs map to different points.
class StubSpeakerVerifierClient final : public SpeakerVerifierClient {
 public:
  explicit StubSpeakerVerifierClient(std::uint64_t seed = 0) : seed_(seed) {
    Rng rng(seed, "stub-speaker");
    q_.resize(static_cast<std::size_t>(kSpeakerDim * kW2vWindow));
    for (auto& v : q_) v = static_cast<float>(rng.normal(0.0, 1.0 / 20.0));
  }

  std::string fingerprint() const override {
    return "stub-speaker(seed=" + std::to_string(seed_) + ")";
  }

  std::vector<float> embed(std::span<const float> wave) const override {
    const std::int64_t frames = wav2vec_frame_count(wave.size());
    if (frames < 1) throw ModelClientError("speaker verifier needs at least 25 ms of audio");
    std::vector<double> acc(kSpeakerDim, 0.0);
    for (std::int64_t t = 0; t < frames; ++t) {
      const float* x = wave.data() + t * kW2vHop;
      for (int c = 0; c < kSpeakerDim; ++c) {
        const float* row = q_.data() + static_cast<std::size_t>(c) * kW2vWindow;
        double v = 0.0;
        for (std::int64_t k = 0; k < kW2vWindow; ++k) v += double(row[k]) * x[k];
        acc[static_cast<std::size_t>(c)] += v * v;
      }
    }
    double n2 = 0.0;
    for (double v : acc) n2 += v * v;
    std::vector<float> e(kSpeakerDim);
    const double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
    for (int c = 0; c < kSpeakerDim; ++c)
      e[static_cast<std::size_t>(c)] =
          n2 > 0.0 ? static_cast<float>(acc[static_cast<std::size_t>(c)] * inv)
                   : static_cast<float>(1.0 / std::sqrt(double(kSpeakerDim)));
    return e;
  }

 private:
  std::uint64_t seed_;
  std::vector<float> q_;
};

// Word-level tokenizer shared by the stub: whitespace separated, leading and
// trailing punctuation stripped, lower-cased. A bracketed corpus token such as
// "[LAUGHTER]" is kept whole as one token.
inline std::vector<std::string> stub_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    const bool bracket = e >= 2 && cur.front() == '[' && cur.back() == ']';
    if (!bracket) {
      while (b < e && std::ispunct(static_cast<unsigned char>(cur[b]))) ++b;
      while (e > b && std::ispunct(static_cast<unsigned char>(cur[e - 1]))) --e;
    }
    std::string tok = cur.substr(b, e - b);
    if (!bracket)
      for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!tok.empty()) out.push_back(std::move(tok));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) flush();
    else cur.push_back(c);
  }
  flush();
  return out;
}

// Each token maps to a fixed N(0, 1) vector seeded by hash(seed, token).
class StubTextModelClient final : public TextModelClient {
 public:
  explicit StubTextModelClient(std::uint64_t seed = 0, std::int64_t dim = kTextDim)
      : seed_(seed), dim_(dim) {}

  std::string fingerprint() const override {
    return "stub-text(seed=" + std::to_string(seed_) + ",dim=" + std::to_string(dim_) + ")";
  }

  std::vector<float> token_embedding(const std::string& token) const {
    Rng rng(seed_, "stub-text/" + token);
    std::vector<float> v(static_cast<std::size_t>(dim_));
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
  }

  TextFeatureSet embed(const std::string& transcript) const override {
    const auto toks = stub_tokenize(transcript);
    TextFeatureSet t;
    t.dim = dim_;
    t.n_tokens = static_cast<std::int64_t>(toks.size());
    for (const auto& tok : toks) {
      const auto e = token_embedding(tok);
      t.tokens.insert(t.tokens.end(), e.begin(), e.end());
    }
    return t;
  }

 private:
  std::uint64_t seed_;
  std::int64_t dim_;
};

}  // namespace emorec
