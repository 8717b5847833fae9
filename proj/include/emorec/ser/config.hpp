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

#include <cstdint>
#include <string>

#include "emorec/common/error.hpp"
#include "emorec/features/feature_types.hpp"
#include "json.hpp"

namespace emorec::ser {

inline constexpr int kSegmentFrames = 96;

struct BottleneckConfig {
  std::string name = "Small";
  int d = 8;  // units per BLSTM direction
  int f = 48;  // temporal downsampling factor

  static BottleneckConfig small() { return {"Small", 8, 48}; }
  static BottleneckConfig large() { return {"Large", 128, 2}; }

  static BottleneckConfig named(const std::string& n) {
    if (n == "Small" || n == "small") return small();
    if (n == "Large" || n == "large") return large();
    throw UsageError("unknown bottleneck '" + n + "' (expected Small or Large)");
  }

  int code_frames() const { return kSegmentFrames / f; }
  int code_width() const { return 2 * d; }

  void validate() const {
    if (d < 1) throw UsageError("bottleneck d must be >= 1");
    if (f < 1 || kSegmentFrames % f != 0)
      throw UsageError("bottleneck f=" + std::to_string(f) + " must divide 96");
  }
};

// Layer counts and widths of every block; defaults are the full-size model.
struct SerArchitecture {
  int layers = kWav2vecLayers;
  int feature_dim = kWav2vecDim;
  int speaker_dim = kSpeakerDim;
  int mel_bins = kMelBins;
  int n_phone_ids = kNumPhoneIds;
  int kernel = 5;
  int prenet_blocks = 3;
  int prenet_filters = 512;
  int encoder_blstm_layers = 2;
  int phone_dim = 128;
  int decoder_blocks = 3;
  int decoder_filters = 512;
  int decoder_lstm_layers = 3;
  int decoder_lstm_units = 1024;
  int postnet_blocks = 5;
  int postnet_filters = 512;
  int classifier_hidden = 512;
  int n_classes = 4;

  // Reduced widths for single-CPU runs on the synthetic corpus.
  static SerArchitecture desk() {
    SerArchitecture a;
    a.prenet_filters = 128;
    a.phone_dim = 64;
    a.decoder_filters = 128;
    a.decoder_lstm_layers = 2;
    a.decoder_lstm_units = 128;
    a.postnet_filters = 128;
    a.classifier_hidden = 128;
    return a;
  }

  void validate() const {
    if (kernel % 2 != 1) throw UsageError("kernel must be odd");
    if (layers < 1 || feature_dim < 1 || prenet_blocks < 0 || encoder_blstm_layers < 1 ||
        decoder_lstm_layers < 1 || postnet_blocks < 1 || phone_dim < 1)
      throw UsageError("invalid SER architecture");
  }
};

struct SerTrainConfig {
  double lr = 1e-4;
  int batch = 2;
  std::int64_t iterations = 1000000;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 10000;
  std::int64_t log_every = 1;
};

struct SerConfig {
  BottleneckConfig bottleneck;
  SerArchitecture arch;
  SerTrainConfig train;
};

inline nlohmann::json to_json(const SerConfig& c) {
  const auto& a = c.arch;
  return {
      {"bottleneck", {{"name", c.bottleneck.name}, {"d", c.bottleneck.d}, {"f", c.bottleneck.f}}},
      {"arch",
       {{"layers", a.layers}, {"feature_dim", a.feature_dim}, {"speaker_dim", a.speaker_dim},
        {"mel_bins", a.mel_bins}, {"n_phone_ids", a.n_phone_ids}, {"kernel", a.kernel},
        {"prenet_blocks", a.prenet_blocks}, {"prenet_filters", a.prenet_filters},
        {"encoder_blstm_layers", a.encoder_blstm_layers}, {"phone_dim", a.phone_dim},
        {"decoder_blocks", a.decoder_blocks}, {"decoder_filters", a.decoder_filters},
        {"decoder_lstm_layers", a.decoder_lstm_layers}, {"decoder_lstm_units", a.decoder_lstm_units},
        {"postnet_blocks", a.postnet_blocks}, {"postnet_filters", a.postnet_filters},
        {"classifier_hidden", a.classifier_hidden}, {"n_classes", a.n_classes}}},
      {"train",
       {{"lr", c.train.lr}, {"batch", c.train.batch}, {"iterations", c.train.iterations},
        {"seed", c.train.seed}, {"checkpoint_every", c.train.checkpoint_every},
        {"log_every", c.train.log_every}}}};
}

inline SerConfig ser_config_from_json(const nlohmann::json& j) {
  SerConfig c;
  try {
    if (j.contains("bottleneck")) {
      const auto& b = j.at("bottleneck");
      if (b.contains("name")) c.bottleneck = BottleneckConfig::named(b.at("name").get<std::string>());
      c.bottleneck.d = b.value("d", c.bottleneck.d);
      c.bottleneck.f = b.value("f", c.bottleneck.f);
    }
    if (j.contains("arch")) {
      const auto& a = j.at("arch");
      auto& o = c.arch;
      o.layers = a.value("layers", o.layers);
      o.feature_dim = a.value("feature_dim", o.feature_dim);
      o.speaker_dim = a.value("speaker_dim", o.speaker_dim);
      o.mel_bins = a.value("mel_bins", o.mel_bins);
      o.n_phone_ids = a.value("n_phone_ids", o.n_phone_ids);
      o.kernel = a.value("kernel", o.kernel);
      o.prenet_blocks = a.value("prenet_blocks", o.prenet_blocks);
      o.prenet_filters = a.value("prenet_filters", o.prenet_filters);
      o.encoder_blstm_layers = a.value("encoder_blstm_layers", o.encoder_blstm_layers);
      o.phone_dim = a.value("phone_dim", o.phone_dim);
      o.decoder_blocks = a.value("decoder_blocks", o.decoder_blocks);
      o.decoder_filters = a.value("decoder_filters", o.decoder_filters);
      o.decoder_lstm_layers = a.value("decoder_lstm_layers", o.decoder_lstm_layers);
      o.decoder_lstm_units = a.value("decoder_lstm_units", o.decoder_lstm_units);
      o.postnet_blocks = a.value("postnet_blocks", o.postnet_blocks);
      o.postnet_filters = a.value("postnet_filters", o.postnet_filters);
      o.classifier_hidden = a.value("classifier_hidden", o.classifier_hidden);
      o.n_classes = a.value("n_classes", o.n_classes);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.lr = t.value("lr", c.train.lr);
      c.train.batch = t.value("batch", c.train.batch);
      c.train.iterations = t.value("iterations", c.train.iterations);
      c.train.seed = t.value("seed", c.train.seed);
      c.train.checkpoint_every = t.value("checkpoint_every", c.train.checkpoint_every);
      c.train.log_every = t.value("log_every", c.train.log_every);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad SER config: ") + e.what());
  }
  c.bottleneck.validate();
  c.arch.validate();
  if (c.train.batch < 1 || c.train.iterations < 0) throw UsageError("bad SER training schedule");
  return c;
}

}  // namespace emorec::ser
