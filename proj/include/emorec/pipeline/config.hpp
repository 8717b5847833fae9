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

#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "emorec/data/manifest.hpp"
#include "emorec/data/synthetic.hpp"
#include "emorec/features/http_clients.hpp"
#include "emorec/features/mel.hpp"
#include "emorec/features/model_clients.hpp"
#include "emorec/fusion/fusion.hpp"
#include "emorec/pipeline/kv_config.hpp"
#include "emorec/probe/probe.hpp"
#include "emorec/ser/config.hpp"
#include "emorec/ter/config.hpp"

namespace emorec::pipeline {

namespace fs = std::filesystem;

struct ExtractorConfig {
  std::string kind = "stub";  // stub | http
  std::string model;
  std::string endpoint;
};

struct DisentangleConfig {
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<int> folds = {1, 2, 3, 4, 5};
  double emotion_margin = 5.0;
};

struct FusionConfig {
  fusion::FusionWeights weights;
  int grid_steps = 10;
  std::string criterion = "overall_accuracy";
  std::string tuned_on = "test folds";
};

struct PipelineConfig {
  std::uint64_t seed = 0;

  std::string corpus = "synthetic";  // synthetic | iemocap
  fs::path iemocap_root;
  fs::path alignments;  // per-utterance <id>.json (Gentle) or <id>.txt
  LabelPolicy label_policy;
  SyntheticCorpusConfig synthetic;

  fs::path cache_dir = "cache";
  fs::path output_dir = "out";
  fs::path manifest;  // default <output>/manifest.txt
  fs::path folds;     // default <output>/folds.txt

  ExtractorConfig wav2vec{"stub", "facebook/wav2vec2-large-lv60", ""};
  ExtractorConfig speaker{"stub", "resemblyzer", ""};
  ExtractorConfig text{"stub", "bert-large-uncased", ""};
  std::uint64_t stub_seed = 0;
  int http_timeout_s = 120;

  ser::SerConfig ser;
  ter::TerConfig ter;
  probe::ProbeConfig probe;
  DisentangleConfig disentangle;
  FusionConfig fusion;

  fs::path manifest_path() const { return manifest.empty() ? output_dir / "manifest.txt" : manifest; }
  fs::path folds_path() const { return folds.empty() ? output_dir / "folds.txt" : folds; }
  fs::path probe_folds_path() const { return output_dir / "probe_folds.txt"; }
};

namespace detail {

inline nlohmann::json extractor_json(const ExtractorConfig& e) {
  return {{"kind", e.kind}, {"model", e.model}, {"endpoint", e.endpoint}};
}

inline ExtractorConfig extractor_from(const nlohmann::json& j, ExtractorConfig d) {
  d.kind = j.value("kind", d.kind);
  d.model = j.value("model", d.model);
  d.endpoint = j.value("endpoint", d.endpoint);
  if (d.kind != "stub" && d.kind != "http") throw UsageError("extractor kind must be stub or http, got " + d.kind);
  if (d.kind == "http" && d.endpoint.empty()) throw UsageError("http extractor " + d.model + " needs an endpoint");
  return d;
}

inline SyntheticCorpusConfig synthetic_from(const nlohmann::json& j) {
  SyntheticCorpusConfig c;
  c.n_speakers = j.value("n_speakers", c.n_speakers);
  c.n_utterances_per_speaker = j.value("n_utterances_per_speaker", c.n_utterances_per_speaker);
  c.frames_per_utterance = j.value("frames_per_utterance", c.frames_per_utterance);
  if (j.contains("factor_snr")) {
    const auto& s = j.at("factor_snr");
    c.factor_snr = s.is_string() && s.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                                   : s.get<double>();
  }
  c.seed = j.value("seed", c.seed);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.text_dim = j.value("text_dim", c.text_dim);
  c.min_tokens = j.value("min_tokens", c.min_tokens);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.vocabulary = j.value("vocabulary", c.vocabulary);
  c.min_phone_run = j.value("min_phone_run", c.min_phone_run);
  c.max_phone_run = j.value("max_phone_run", c.max_phone_run);
  c.validate();
  return c;
}

// Sub-seeds not given explicitly follow the root seed.
inline void inherit_seed(nlohmann::json& j, const std::vector<std::string>& path, std::uint64_t seed) {
  nlohmann::json* node = &j;
  for (const auto& k : path) {
    if (!node->contains(k)) (*node)[k] = nlohmann::json::object();
    node = &(*node)[k];
  }
  if (!node->contains("seed")) (*node)["seed"] = seed;
}

inline const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  return j.contains(key) ? j.at(key) : empty;
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json dis = {{"seeds", c.disentangle.seeds},
                        {"folds", c.disentangle.folds},
                        {"emotion_margin", c.disentangle.emotion_margin}};
  return {
      {"seed", c.seed},
      {"corpus",
       {{"source", c.corpus},
        {"iemocap_root", c.iemocap_root.string()},
        {"alignments", c.alignments.string()},
        {"merge_before_agreement", c.label_policy.merge_before_agreement},
        {"min_agreement", c.label_policy.min_agreement}}},
      {"synthetic", c.synthetic.to_json()},
      {"paths",
       {{"cache", c.cache_dir.string()},
        {"output", c.output_dir.string()},
        {"manifest", c.manifest_path().string()},
        {"folds", c.folds_path().string()}}},
      {"extractors",
       {{"wav2vec", detail::extractor_json(c.wav2vec)},
        {"speaker", detail::extractor_json(c.speaker)},
        {"text", detail::extractor_json(c.text)},
        {"stub_seed", c.stub_seed},
        {"http_timeout_s", c.http_timeout_s}}},
      {"ser", ser::to_json(c.ser)},
      {"ter", ter::to_json(c.ter)},
      {"probe", probe::to_json(c.probe)},
      {"disentangle", dis},
      {"fusion",
       {{"w1", c.fusion.weights.w1},
        {"w2", c.fusion.weights.w2},
        {"grid_steps", c.fusion.grid_steps},
        {"criterion", c.fusion.criterion},
        {"tuned_on", c.fusion.tuned_on}}}};
}

inline PipelineConfig pipeline_config_from_json(nlohmann::json j) {
  PipelineConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    detail::inherit_seed(j, {"ser", "train"}, c.seed);
    detail::inherit_seed(j, {"ter", "train"}, c.seed);
    detail::inherit_seed(j, {"probe"}, c.seed);

    const auto& corpus = detail::section(j, "corpus");
    c.corpus = corpus.value("source", c.corpus);
    if (c.corpus != "synthetic" && c.corpus != "iemocap")
      throw UsageError("corpus.source must be synthetic or iemocap, got " + c.corpus);
    c.iemocap_root = corpus.value("iemocap_root", std::string());
    c.alignments = corpus.value("alignments", std::string());
    c.label_policy.merge_before_agreement = corpus.value("merge_before_agreement", false);
    c.label_policy.min_agreement = corpus.value("min_agreement", c.label_policy.min_agreement);

    c.synthetic = detail::synthetic_from(detail::section(j, "synthetic"));

    const auto& paths = detail::section(j, "paths");
    c.cache_dir = paths.value("cache", c.cache_dir.string());
    c.output_dir = paths.value("output", c.output_dir.string());
    c.manifest = paths.value("manifest", std::string());
    c.folds = paths.value("folds", std::string());

    const auto& ex = detail::section(j, "extractors");
    c.wav2vec = detail::extractor_from(detail::section(ex, "wav2vec"), c.wav2vec);
    c.speaker = detail::extractor_from(detail::section(ex, "speaker"), c.speaker);
    c.text = detail::extractor_from(detail::section(ex, "text"), c.text);
    c.stub_seed = ex.value("stub_seed", c.stub_seed);
    c.http_timeout_s = ex.value("http_timeout_s", c.http_timeout_s);

    c.ser = ser::ser_config_from_json(detail::section(j, "ser"));
    c.ter = ter::ter_config_from_json(detail::section(j, "ter"));
    if (!detail::section(j, "ter").contains("extractor")) c.ter.extractor = c.text.model;
    c.probe = probe::probe_config_from_json(detail::section(j, "probe"));

    const auto& dis = detail::section(j, "disentangle");
    c.disentangle.seeds = dis.value("seeds", c.disentangle.seeds);
    c.disentangle.folds = dis.value("folds", c.disentangle.folds);
    c.disentangle.emotion_margin = dis.value("emotion_margin", c.disentangle.emotion_margin);
    if (c.disentangle.seeds.empty()) throw UsageError("disentangle.seeds must not be empty");
    for (int k : c.disentangle.folds)
      if (k < 1 || k > kNumSessions) throw UsageError("disentangle.folds entries must be in 1..5");

    const auto& fu = detail::section(j, "fusion");
    c.fusion.weights.w1 = fu.value("w1", c.fusion.weights.w1);
    c.fusion.weights.w2 = fu.value("w2", c.fusion.weights.w2);
    c.fusion.weights.validate();
    c.fusion.grid_steps = fu.value("grid_steps", c.fusion.grid_steps);
    if (c.fusion.grid_steps < 1) throw UsageError("fusion.grid_steps must be >= 1");
    c.fusion.criterion = fu.value("criterion", c.fusion.criterion);
    fusion::parse_criterion(c.fusion.criterion);
    c.fusion.tuned_on = fu.value("tuned_on", c.fusion.tuned_on);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  return c;
}

// Reads an optional config file, then applies key=value overrides.
inline PipelineConfig load_config(const fs::path& file, const std::vector<std::string>& overrides) {
  nlohmann::json j = file.empty() ? nlohmann::json::object() : read_kv_config(file);
  apply_overrides(j, overrides);
  return pipeline_config_from_json(std::move(j));
}

// Writes the effective configuration (defaults resolved) as <dir>/config.conf.
inline fs::path write_effective_config(const PipelineConfig& c, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.conf";
  const fs::path tmp = dir / "config.conf.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << format_kv_config(to_json(c));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
  return p;
}

// Model clients built from the extractor settings. Stub widths follow the
// model input widths so stub features feed the configured models directly.
struct ModelClients {
  std::unique_ptr<Wav2vecClient> wav2vec;
  std::unique_ptr<SpeakerVerifierClient> speaker;
  std::unique_ptr<TextModelClient> text;
};

inline ModelClients make_clients(const PipelineConfig& c) {
  ModelClients m;
  auto transport = [&](const ExtractorConfig& e) { return HttpModelTransport(e.endpoint, c.http_timeout_s); };
  if (c.wav2vec.kind == "http")
    m.wav2vec = std::make_unique<HttpWav2vecClient>(transport(c.wav2vec), c.wav2vec.model);
  else
    m.wav2vec = std::make_unique<StubWav2vecClient>(c.stub_seed, false, c.ser.arch.feature_dim);
  if (c.speaker.kind == "http")
    m.speaker = std::make_unique<HttpSpeakerVerifierClient>(transport(c.speaker), c.speaker.model);
  else
    m.speaker = std::make_unique<StubSpeakerVerifierClient>(c.stub_seed);
  if (c.text.kind == "http")
    m.text = std::make_unique<HttpTextModelClient>(transport(c.text), c.text.model);
  else
    m.text = std::make_unique<StubTextModelClient>(c.stub_seed, c.ter.arch.token_dim);
  return m;
}

// Cache fingerprints: any change to the feature source invalidates records.
inline std::string speech_fingerprint(const PipelineConfig& c, const ModelClients& m) {
  if (c.corpus == "synthetic") return c.synthetic.fingerprint() + "/speech";
  return "speech-v1|" + m.wav2vec->fingerprint() + "|" + m.speaker->fingerprint() + "|" + MelOptions{}.fingerprint() +
         "|align=" + (c.alignments.empty() ? std::string("none") : c.alignments.string());
}

inline std::string text_fingerprint(const PipelineConfig& c, const ModelClients& m) {
  if (c.corpus == "synthetic") return c.synthetic.fingerprint() + "/text";
  return "text-v1|" + m.text->fingerprint();
}

}  // namespace emorec::pipeline
