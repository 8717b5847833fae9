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

// Minimal RIFF/WAVE reader and writer: 16-bit PCM or 32-bit float, any
// channel count (downmixed to mono on read).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "emorec/common/error.hpp"

namespace emorec {

struct Waveform {
  int sample_rate = 16000;
  std::vector<float> samples;  // mono, nominally in [-1, 1]

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
inline std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

inline void wr_u32(std::ostream& o, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) o.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void wr_u16(std::ostream& o, std::uint16_t v) {
  o.put(static_cast<char>(v & 0xff));
  o.put(static_cast<char>(v >> 8));
}

}  // namespace detail

inline Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& w) -> Waveform {
    throw DataError("bad wav file " + path.string() + ": " + w);
  };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) || std::memcmp(buf.data() + 8, "WAVE", 4))
    return fail("not a RIFF/WAVE file");
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  for (std::size_t pos = 12; pos + 8 <= buf.size();) {
    const std::uint32_t len = detail::rd_u32(&buf[pos + 4]);
    const unsigned char* body = &buf[pos + 8];
    const std::size_t avail = std::min<std::size_t>(len, buf.size() - pos - 8);
    if (!std::memcmp(&buf[pos], "fmt ", 4) && avail >= 16) {
      format = detail::rd_u16(body);
      channels = detail::rd_u16(body + 2);
      rate = detail::rd_u32(body + 4);
      bits = detail::rd_u16(body + 14);
      if (format == 0xFFFE && avail >= 26) format = detail::rd_u16(body + 24);
    } else if (!std::memcmp(&buf[pos], "data", 4)) {
      data = body;
      data_len = avail;
    }
    pos += 8 + len + (len & 1);
  }
  if (!data || channels == 0) return fail("missing fmt or data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32) return fail("only 16-bit PCM and 32-bit float are supported");
  const std::size_t width = bits / 8u, frames = data_len / (width * channels);
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * width;
      if (pcm16) {
        acc += static_cast<std::int16_t>(detail::rd_u16(p)) / 32768.0;
      } else {
        const std::uint32_t u = detail::rd_u32(p);
        float f;
        std::memcpy(&f, &u, 4);
        acc += f;
      }
    }
    w.samples[i] = static_cast<float>(acc / channels);
  }
  return w;
}

inline void write_wav_pcm16(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write audio file " + path.string());
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  out.write("RIFF", 4);
  detail::wr_u32(out, 36 + 2 * n);
  out.write("WAVEfmt ", 8);
  detail::wr_u32(out, 16);
  detail::wr_u16(out, 1);
  detail::wr_u16(out, 1);
  detail::wr_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  detail::wr_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  detail::wr_u16(out, 2);
  detail::wr_u16(out, 16);
  out.write("data", 4);
  detail::wr_u32(out, 2 * n);
  for (float s : w.samples) {
    const double c = std::clamp(static_cast<double>(s), -1.0, 32767.0 / 32768.0);
    detail::wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32768.0))));
  }
}

// The extractors expect 16 kHz mono; anything else is rejected rather than
// silently resampled.
inline Waveform read_wav_16k(const std::filesystem::path& path) {
  Waveform w = read_wav(path);
  if (w.sample_rate != 16000)
    throw DataError(path.string() + " is sampled at " + std::to_string(w.sample_rate) +
                    " Hz; 16000 Hz is required");
  return w;
}

}  // namespace emorec
