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
#include <filesystem>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "emorec/features/cache.hpp"
#include "emorec/features/extract.hpp"
#include "emorec/nn/adam.hpp"
#include "emorec/nn/checkpoint.hpp"
#include "emorec/ter/model.hpp"

namespace emorec::ter {

using LogSink = std::function<void(const nlohmann::json&)>;

inline constexpr const char* kTerCheckpointKind = "ter-checkpoint-v1";

// N' over the training ids only.
inline std::int64_t fit_max_tokens(const FeatureSource& src, const std::vector<std::string>& train_ids) {
  return max_token_count(train_ids, [&](const std::string& id) { return src.text(id)->n_tokens; });
}

// Shuffled epochs of the training set, batch items taken in order.
class TerTrainer {
 public:
  TerTrainer(TerConfig cfg, const FeatureSource& src, std::vector<std::string> ids, std::vector<int> labels)
      : cfg_(std::move(cfg)),
        src_(&src),
        ids_(std::move(ids)),
        labels_(std::move(labels)),
        data_rng_(cfg_.train.seed, "data") {
    if (ids_.empty() || ids_.size() != labels_.size()) throw UsageError("TER training set is empty or unlabeled");
    if (cfg_.max_tokens == 0) cfg_.max_tokens = fit_max_tokens(*src_, ids_);
    model_ = std::make_unique<TerModel<float>>(cfg_.arch, cfg_.train.seed);
    opt_ = nn::Adam<float>(model_->parameters(), nn::AdamOptions{.lr = cfg_.train.lr});
  }

  static TerTrainer resume(const ArrayRecord& ck, const FeatureSource& src) {
    if (ck.metadata.value("kind", "") != kTerCheckpointKind)
      throw CacheError(CacheError::Kind::kCorrupt, "not a TER checkpoint");
    TerTrainer t(ter_config_from_json(ck.metadata.at("config")), src,
                 ck.metadata.at("train_ids").get<std::vector<std::string>>(),
                 ck.metadata.at("train_labels").get<std::vector<int>>());
    nn::load_params(ck, t.model_->parameters());
    nn::load_adam(ck, t.opt_);
    t.iteration_ = ck.metadata.at("iteration").get<std::int64_t>();
    t.data_rng_.set_state(ck.metadata.at("rng_data").get<std::string>());
    t.order_ = ck.metadata.at("epoch_order").get<std::vector<std::size_t>>();
    t.cursor_ = ck.metadata.at("epoch_cursor").get<std::size_t>();
    return t;
  }

  const TerConfig& config() const { return cfg_; }
  std::int64_t iteration() const { return iteration_; }
  TerModel<float>& model() { return *model_; }
  void set_dump_dir(std::filesystem::path p) { dump_dir_ = std::move(p); }

  double step() {
    std::vector<std::shared_ptr<const TextFeatureSet>> keep;
    std::vector<const TextFeatureSet*> items;
    std::vector<int> labels;
    std::vector<std::string> picked;
    for (int j = 0; j < cfg_.train.batch; ++j) {
      const std::size_t k = next_index();
      keep.push_back(src_->text(ids_[k]));
      items.push_back(keep.back().get());
      labels.push_back(labels_[k]);
      picked.push_back(ids_[k]);
    }
    const auto batch = build_token_batch<float>(items, labels, cfg_.max_tokens, cfg_.arch.token_dim, picked);
    opt_.zero_grad();
    const Mat<float> logits = model_->forward(batch, true);
    const double loss = nn::cross_entropy_batch(logits, labels);
    if (!std::isfinite(loss)) dump_and_throw(batch, logits, picked);
    model_->backward(nn::cross_entropy_batch_grad(logits, labels));
    opt_.step();
    ++iteration_;
    return loss;
  }

  void run(std::int64_t iterations, const LogSink& log, const std::filesystem::path& checkpoint_path = {}) {
    cfg_.train.iterations = iterations;
    while (iteration_ < iterations) {
      const double l = step();
      if (log && cfg_.train.log_every > 0 && iteration_ % cfg_.train.log_every == 0)
        log({{"iter", iteration_}, {"l_e", l}, {"total", l}});
      if (!checkpoint_path.empty() && cfg_.train.checkpoint_every > 0 &&
          iteration_ % cfg_.train.checkpoint_every == 0)
        write_record_file(checkpoint_path, checkpoint());
    }
    if (!checkpoint_path.empty()) write_record_file(checkpoint_path, checkpoint());
  }

  ArrayRecord checkpoint() {
    ArrayRecord r;
    r.fingerprint = kTerCheckpointKind;
    r.metadata["kind"] = kTerCheckpointKind;
    r.metadata["config"] = to_json(cfg_);
    r.metadata["iteration"] = iteration_;
    r.metadata["seed"] = cfg_.train.seed;
    r.metadata["extractor"] = cfg_.extractor;
    r.metadata["rng_data"] = data_rng_.state();
    r.metadata["epoch_order"] = order_;
    r.metadata["epoch_cursor"] = cursor_;
    r.metadata["train_ids"] = ids_;
    r.metadata["train_labels"] = labels_;
    nn::save_params(model_->parameters(), r);
    nn::save_adam(opt_, r);
    return r;
  }

 private:
  std::size_t next_index() {
    if (cursor_ >= order_.size()) {
      order_.resize(ids_.size());
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      std::shuffle(order_.begin(), order_.end(), data_rng_.engine());
      cursor_ = 0;
    }
    return order_[cursor_++];
  }

  [[noreturn]] void dump_and_throw(const TokenBatch<float>& b, const Mat<float>& logits,
                                   const std::vector<std::string>& picked) {
    std::string where;
    if (!dump_dir_.empty()) {
      ArrayRecord d;
      d.fingerprint = "ter-nan-dump";
      d.metadata = {{"iteration", iteration_ + 1}, {"utterances", picked}, {"labels", b.labels}};
      d.arrays.push_back(nn::matrix_array("tokens", b.x));
      d.arrays.push_back(nn::matrix_array("logits", logits));
      const auto path = dump_dir_ / ("nan_batch_iter" + std::to_string(iteration_ + 1) + ".rec");
      try {
        write_record_file(path, d);
        where = "; batch dumped to " + path.string();
      } catch (const Error&) {
        where = "; writing the batch dump failed";
      }
    }
    std::string who;
    for (const auto& p : picked) who += (who.empty() ? "" : ", ") + p;
    throw TrainingError("non-finite TER loss at iteration " + std::to_string(iteration_ + 1) + " (utterances " +
                        who + ")" + where);
  }

  TerConfig cfg_;
  const FeatureSource* src_;
  std::vector<std::string> ids_;
  std::vector<int> labels_;
  std::unique_ptr<TerModel<float>> model_;
  nn::Adam<float> opt_;
  Rng data_rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::int64_t iteration_ = 0;
  std::filesystem::path dump_dir_;
};

struct LoadedTer {
  std::unique_ptr<TerModel<float>> model;
  TerConfig config;
  std::int64_t iteration = 0;
};

inline LoadedTer load_ter_checkpoint(const ArrayRecord& ck) {
  if (ck.metadata.value("kind", "") != kTerCheckpointKind)
    throw CacheError(CacheError::Kind::kCorrupt, "not a TER checkpoint");
  LoadedTer t;
  t.config = ter_config_from_json(ck.metadata.at("config"));
  t.model = std::make_unique<TerModel<float>>(t.config.arch, t.config.train.seed);
  nn::load_params(ck, t.model->parameters());
  t.iteration = ck.metadata.at("iteration").get<std::int64_t>();
  return t;
}

}  // namespace emorec::ter
