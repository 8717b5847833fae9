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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "emorec/features/cache.hpp"
#include "emorec/nn/checkpoint.hpp"
#include "emorec/ser/batch.hpp"

namespace emorec::ser {

using LogSink = std::function<void(const nlohmann::json&)>;

inline constexpr const char* kSerCheckpointKind = "ser-checkpoint-v1";

// Global log-mel range over the given (training) utterances.
inline MelNormalizer fit_mel_normalizer(const FeatureSource& src, const std::vector<std::string>& ids) {
  std::vector<std::shared_ptr<const SpeechFeatureSet>> keep;
  std::vector<const std::vector<float>*> mels;
  for (const auto& id : ids) {
    keep.push_back(src.speech(id));
    mels.push_back(&keep.back()->mel);
  }
  MelNormalizer n;
  n.fit(mels);
  return n;
}

inline nlohmann::json mel_norm_json(const MelNormalizer& n) { return {{"min", n.min}, {"max", n.max}}; }
inline MelNormalizer mel_norm_from_json(const nlohmann::json& j) {
  MelNormalizer n;
  n.min = j.at("min").get<float>();
  n.max = j.at("max").get<float>();
  n.fitted = true;
  return n;
}

class SerTrainer {
 public:
  SerTrainer(SerConfig cfg, const FeatureSource& src, std::vector<std::string> ids, std::vector<int> labels,
             MelNormalizer mel_norm)
      : cfg_(std::move(cfg)),
        src_(&src),
        ids_(std::move(ids)),
        labels_(std::move(labels)),
        mel_norm_(mel_norm),
        model_(std::make_unique<SerModel<float>>(cfg_.bottleneck, cfg_.arch, cfg_.train.seed)),
        data_rng_(cfg_.train.seed, "data"),
        crop_rng_(cfg_.train.seed, "crop") {
    if (ids_.empty() || ids_.size() != labels_.size()) throw UsageError("SER training set is empty or unlabeled");
    opt_ = nn::Adam<float>(model_->parameters(), nn::AdamOptions{.lr = cfg_.train.lr});
  }

  // Restores a trainer from a checkpoint written by checkpoint().
  static SerTrainer resume(const ArrayRecord& ck, const FeatureSource& src) {
    if (ck.metadata.value("kind", "") != kSerCheckpointKind)
      throw CacheError(CacheError::Kind::kCorrupt, "not an SER checkpoint");
    SerTrainer t(ser_config_from_json(ck.metadata.at("config")), src,
                 ck.metadata.at("train_ids").get<std::vector<std::string>>(),
                 ck.metadata.at("train_labels").get<std::vector<int>>(),
                 mel_norm_from_json(ck.metadata.at("mel_norm")));
    nn::load_params(ck, t.model_->parameters());
    nn::load_adam(ck, t.opt_);
    t.iteration_ = ck.metadata.at("iteration").get<std::int64_t>();
    t.data_rng_.set_state(ck.metadata.at("rng_data").get<std::string>());
    t.crop_rng_.set_state(ck.metadata.at("rng_crop").get<std::string>());
    return t;
  }

  const SerConfig& config() const { return cfg_; }
  std::int64_t iteration() const { return iteration_; }
  SerModel<float>& model() { return *model_; }
  const MelNormalizer& mel_normalizer() const { return mel_norm_; }
  void set_dump_dir(std::filesystem::path p) { dump_dir_ = std::move(p); }

  // One optimizer step on a freshly sampled batch.
  SerLosses step(const LogSink& log = {}) {
    std::vector<std::shared_ptr<const SpeechFeatureSet>> keep;
    std::vector<SegmentRef> refs;
    std::vector<std::string> picked;
    for (int j = 0; j < cfg_.train.batch; ++j) {
      const auto k = static_cast<std::size_t>(data_rng_.uniform_int(0, static_cast<std::int64_t>(ids_.size()) - 1));
      keep.push_back(src_->speech(ids_[k]));
      const std::int64_t frames = keep.back()->frames;
      const std::int64_t start = frames > kSegmentFrames ? crop_rng_.uniform_int(0, frames - kSegmentFrames) : 0;
      refs.push_back({keep.back().get(), start, labels_[k]});
      picked.push_back(ids_[k] + "@" + std::to_string(start));
    }
    const SegmentBatch<float> batch = build_batch<float>(refs, mel_norm_, cfg_.arch);

    if (model_->layer_average().guard() && log)
      log({{"event", "alpha_renormalized"}, {"iter", iteration_ + 1}});
    opt_.zero_grad();
    const SerOutputs<float> out = model_->forward(batch, true);
    Mat<float> d_pre, d_post, d_logits;
    const SerLosses l = model_->losses(out, batch, &d_pre, &d_post, &d_logits);
    if (!std::isfinite(l.total())) dump_and_throw(batch, out, picked, l);
    model_->backward(d_pre, d_post, d_logits);
    opt_.step();
    ++iteration_;
    return l;
  }

  // Trains until `iterations` steps have been taken in total, logging every
  // log_every steps and checkpointing every checkpoint_every steps.
  void run(std::int64_t iterations, const LogSink& log, const std::filesystem::path& checkpoint_path = {}) {
    cfg_.train.iterations = iterations;
    while (iteration_ < iterations) {
      const SerLosses l = step(log);
      if (log && cfg_.train.log_every > 0 && iteration_ % cfg_.train.log_every == 0)
        log({{"iter", iteration_}, {"l_r1", l.l_r1}, {"l_r2", l.l_r2}, {"l_e", l.l_e}, {"total", l.total()}});
      if (!checkpoint_path.empty() && cfg_.train.checkpoint_every > 0 &&
          iteration_ % cfg_.train.checkpoint_every == 0)
        write_record_file(checkpoint_path, checkpoint());
    }
    if (!checkpoint_path.empty()) write_record_file(checkpoint_path, checkpoint());
  }

  ArrayRecord checkpoint() {
    ArrayRecord r;
    r.fingerprint = kSerCheckpointKind;
    r.metadata["kind"] = kSerCheckpointKind;
    r.metadata["config"] = to_json(cfg_);
    r.metadata["iteration"] = iteration_;
    r.metadata["seed"] = cfg_.train.seed;
    r.metadata["rng_data"] = data_rng_.state();
    r.metadata["rng_crop"] = crop_rng_.state();
    r.metadata["mel_norm"] = mel_norm_json(mel_norm_);
    r.metadata["train_ids"] = ids_;
    r.metadata["train_labels"] = labels_;
    nn::save_params(model_->parameters(), r);
    nn::save_adam(opt_, r);
    return r;
  }

 private:
  [[noreturn]] void dump_and_throw(const SegmentBatch<float>& b, const SerOutputs<float>& o,
                                   const std::vector<std::string>& picked, const SerLosses& l) {
    std::string where;
    if (!dump_dir_.empty()) {
      ArrayRecord d;
      d.fingerprint = "ser-nan-dump";
      d.metadata = {{"iteration", iteration_ + 1}, {"segments", picked}, {"labels", b.labels},
                    {"l_r1", l.l_r1}, {"l_r2", l.l_r2}, {"l_e", l.l_e}};
      d.arrays.push_back(nn::matrix_array("mel_target", b.mel_target));
      d.arrays.push_back(nn::matrix_array("mel_pre", o.mel_pre));
      d.arrays.push_back(nn::matrix_array("logits", o.logits));
      d.arrays.push_back(nn::matrix_array("alpha", model_->layer_average().alpha().value));
      const auto path = dump_dir_ / ("nan_batch_iter" + std::to_string(iteration_ + 1) + ".rec");
      try {
        write_record_file(path, d);
        where = "; batch dumped to " + path.string();
      } catch (const Error&) {
        where = "; writing the batch dump failed";
      }
    }
    std::string segs;
    for (const auto& p : picked) segs += (segs.empty() ? "" : ", ") + p;
    throw TrainingError("non-finite SER loss at iteration " + std::to_string(iteration_ + 1) + " (segments " +
                        segs + ")" + where);
  }

  SerConfig cfg_;
  const FeatureSource* src_;
  std::vector<std::string> ids_;
  std::vector<int> labels_;
  MelNormalizer mel_norm_;
  std::unique_ptr<SerModel<float>> model_;
  nn::Adam<float> opt_;
  Rng data_rng_, crop_rng_;
  std::int64_t iteration_ = 0;
  std::filesystem::path dump_dir_;
};

// Inference-only view of a checkpoint.
struct LoadedSer {
  std::unique_ptr<SerModel<float>> model;
  MelNormalizer mel_norm;
  SerConfig config;
  std::int64_t iteration = 0;
};

inline LoadedSer load_ser_checkpoint(const ArrayRecord& ck) {
  if (ck.metadata.value("kind", "") != kSerCheckpointKind)
    throw CacheError(CacheError::Kind::kCorrupt, "not an SER checkpoint");
  LoadedSer s;
  s.config = ser_config_from_json(ck.metadata.at("config"));
  s.model = std::make_unique<SerModel<float>>(s.config.bottleneck, s.config.arch, s.config.train.seed);
  nn::load_params(ck, s.model->parameters());
  s.mel_norm = mel_norm_from_json(ck.metadata.at("mel_norm"));
  s.iteration = ck.metadata.at("iteration").get<std::int64_t>();
  return s;
}

}  // namespace emorec::ser
