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
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "emorec/common/error.hpp"
#include "emorec/features/feature_types.hpp"

namespace emorec {

// 20 ms hop and 25 ms window match the wav2vec 2.0 frame rate, so mel frame
// t and wav2vec frame t describe the same audio.
struct MelOptions {
  int sample_rate = 16000;
  int n_mels = kMelBins;
  int hop = 320;
  int window = 400;
  int n_fft = 512;
  double fmin = 0.0;
  double fmax = 8000.0;
  double magnitude_floor = 1e-5;

  std::string fingerprint() const {
    return "mel-v1(sr=" + std::to_string(sample_rate) + ",n=" + std::to_string(n_mels) +
           ",hop=" + std::to_string(hop) + ",win=" + std::to_string(window) +
           ",fft=" + std::to_string(n_fft) + ")";
  }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular HTK-style filters, [n_mels][n_fft / 2 + 1].
inline std::vector<std::vector<double>> mel_filterbank(const MelOptions& o) {
  const int bins = o.n_fft / 2 + 1;
  std::vector<double> pts(static_cast<std::size_t>(o.n_mels + 2));
  const double lo = hz_to_mel(o.fmin), hi = hz_to_mel(o.fmax);
  for (int i = 0; i < o.n_mels + 2; ++i)
    pts[static_cast<std::size_t>(i)] = mel_to_hz(lo + (hi - lo) * i / (o.n_mels + 1));
  std::vector<std::vector<double>> fb(static_cast<std::size_t>(o.n_mels),
                                      std::vector<double>(static_cast<std::size_t>(bins), 0.0));
  for (int m = 0; m < o.n_mels; ++m) {
    const double l = pts[static_cast<std::size_t>(m)], c = pts[static_cast<std::size_t>(m + 1)],
                 r = pts[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * o.sample_rate / o.n_fft;
      double w = 0.0;
      if (f > l && f <= c) w = (f - l) / (c - l);
      else if (f > c && f < r) w = (r - f) / (r - c);
      fb[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = w;
    }
  }
  return fb;
}

inline std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

inline std::int64_t mel_frame_count(std::size_t samples, const MelOptions& o) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(samples) / o.hop);
}

// Log-magnitude mel spectrogram, [frames, n_mels] row-major, before corpus
// normalization. Frame t analyses samples [t * hop, t * hop + window),
// zero-padded past the end; frames = max(1, floor(samples / hop)).
inline std::vector<float> compute_log_mel(std::span<const float> wave, const MelOptions& o = {}) {
  if (wave.empty()) throw DataError("cannot compute a mel spectrogram of an empty waveform");
  const std::int64_t frames = mel_frame_count(wave.size(), o);
  const auto fb = mel_filterbank(o);
  const auto win = hann_window(o.window);
  const int bins = o.n_fft / 2 + 1;
  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(o.n_fft));
  std::vector<std::complex<double>> spec;
  std::vector<double> mag(static_cast<std::size_t>(bins));
  std::vector<float> out(static_cast<std::size_t>(frames * o.n_mels));
  for (std::int64_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < o.window; ++i) {
      const auto idx = static_cast<std::size_t>(t * o.hop + i);
      if (idx < wave.size()) buf[static_cast<std::size_t>(i)] = wave[idx] * win[static_cast<std::size_t>(i)];
    }
    fft.fwd(spec, buf);
    for (int k = 0; k < bins; ++k) mag[static_cast<std::size_t>(k)] = std::abs(spec[static_cast<std::size_t>(k)]);
    for (int m = 0; m < o.n_mels; ++m) {
      double e = 0.0;
      const auto& row = fb[static_cast<std::size_t>(m)];
      for (int k = 0; k < bins; ++k) e += row[static_cast<std::size_t>(k)] * mag[static_cast<std::size_t>(k)];
      out[static_cast<std::size_t>(t * o.n_mels + m)] =
          static_cast<float>(std::log(std::max(e, o.magnitude_floor)));
    }
  }
  return out;
}

// Global min-max scaling of log-mel values to [0, 1], fitted on training
// utterances only. Values outside the fitted range are clipped.
struct MelNormalizer {
  float min = 0.0f;
  float max = 1.0f;
  bool fitted = false;

  void fit(const std::vector<const std::vector<float>*>& mels) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (const auto* m : mels)
      for (float v : *m) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (!std::isfinite(lo)) throw DataError("mel normalizer fitted on no data");
    min = lo;
    max = hi;
    fitted = true;
  }

  float apply(float v) const {
    if (max <= min) return 0.0f;
    return std::clamp((v - min) / (max - min), 0.0f, 1.0f);
  }

  std::vector<float> apply(const std::vector<float>& mel) const {
    std::vector<float> out(mel.size());
    for (std::size_t i = 0; i < mel.size(); ++i) out[i] = apply(mel[i]);
    return out;
  }
};

}  // namespace emorec
