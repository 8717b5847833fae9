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

// Speaker-identification probe on frozen utterance-level SER codes: an MLP
// of affine layers with ReLU in between, trained with cross entropy.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emorec/eval/cv.hpp"
#include "emorec/nn/adam.hpp"
#include "emorec/nn/layers.hpp"
#include "emorec/nn/loss.hpp"
#include "json.hpp"

namespace emorec::probe {

using nn::Index;
using nn::Mat;
using nn::Vec;

struct ProbeConfig {
  std::vector<int> hidden = {2048, 1024, 1024};  // output width = number of speakers
  double lr = 1e-4;
  std::int64_t iterations = 1000;
  int batch = 32;
  std::uint64_t seed = 0;
  bool standardize = true;

  void validate() const {
    for (int h : hidden)
      if (h < 1) throw UsageError("probe layer widths must be positive");
    if (iterations < 1 || batch < 1 || !(lr > 0.0)) throw UsageError("bad probe schedule");
  }
};

inline nlohmann::json to_json(const ProbeConfig& c) {
  return {{"hidden", c.hidden}, {"lr", c.lr}, {"iterations", c.iterations},
          {"batch", c.batch}, {"seed", c.seed}, {"standardize", c.standardize}};
}

inline ProbeConfig probe_config_from_json(const nlohmann::json& j) {
  ProbeConfig c;
  try {
    c.hidden = j.value("hidden", c.hidden);
    c.lr = j.value("lr", c.lr);
    c.iterations = j.value("iterations", c.iterations);
    c.batch = j.value("batch", c.batch);
    c.seed = j.value("seed", c.seed);
    c.standardize = j.value("standardize", c.standardize);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad probe config: ") + e.what());
  }
  c.validate();
  return c;
}

class ProbeMlp {
 public:
  ProbeMlp(Index in, const std::vector<int>& hidden, Index n_classes, Rng& rng) {
    Index d = in;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      layers_.emplace_back(d, hidden[i], "probe.fc" + std::to_string(i), rng);
      d = hidden[i];
    }
    layers_.emplace_back(d, n_classes, "probe.fc" + std::to_string(hidden.size()), rng);
    acts_.resize(layers_.size());
  }

  nn::ParamList<float> parameters() {
    nn::ParamList<float> p;
    for (auto& l : layers_) l.collect(p);
    return p;
  }

  Mat<float> forward(const Mat<float>& x) {
    Mat<float> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i].forward(h);
      if (i + 1 < layers_.size()) h = h.cwiseMax(0.0f);
      acts_[i] = h;
    }
    return h;
  }

  Mat<float> apply(const Mat<float>& x) const {
    Mat<float> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i].apply(h);
      if (i + 1 < layers_.size()) h = h.cwiseMax(0.0f);
    }
    return h;
  }

  void backward(const Mat<float>& d_logits) {
    Mat<float> g = d_logits;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      if (i + 1 < layers_.size()) g = (acts_[i].array() > 0.0f).select(g, 0.0f);
      g = layers_[i].backward(g);
    }
  }

 private:
  std::vector<nn::Linear<float>> layers_;
  std::vector<Mat<float>> acts_;
};

// Per-dimension z-scoring fitted on the training columns.
struct Standardizer {
  Vec<double> mean, inv_std;

  static Standardizer fit(const Mat<double>& x) {
    Standardizer s;
    s.mean = x.rowwise().mean();
    const Mat<double> c = x.colwise() - s.mean;
    const Vec<double> var = c.array().square().rowwise().mean();
    s.inv_std = var.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; });
    return s;
  }

  Mat<float> apply(const Mat<double>& x) const {
    return ((x.colwise() - mean).array().colwise() * inv_std.array()).matrix().cast<float>();
  }
};

struct TrainedProbe {
  std::unique_ptr<ProbeMlp> mlp;
  std::optional<Standardizer> standardizer;
  std::vector<std::string> classes;  // index -> speaker id

  std::vector<int> predict(const Mat<double>& x) const {
    const Mat<float> in = standardizer ? standardizer->apply(x) : Mat<float>(x.cast<float>());
    const Mat<float> logits = mlp->apply(in);
    std::vector<int> out;
    for (Index j = 0; j < logits.cols(); ++j) {
      Index k = 0;
      logits.col(j).maxCoeff(&k);
      out.push_back(static_cast<int>(k));
    }
    return out;
  }
};

// Trains one probe; x is [dim, n] with one column per training utterance.
inline TrainedProbe train_probe(const Mat<double>& x, const std::vector<int>& labels, std::vector<std::string> classes,
                                const ProbeConfig& cfg, const std::string& stream = "probe") {
  cfg.validate();
  if (classes.size() < 2) throw DataError("speaker probe needs at least 2 speakers, got " + std::to_string(classes.size()));
  if (x.cols() != static_cast<Index>(labels.size()) || x.cols() == 0)
    throw UsageError("probe features and labels differ in count");
  TrainedProbe p;
  p.classes = std::move(classes);
  Mat<float> in;
  if (cfg.standardize) {
    p.standardizer = Standardizer::fit(x);
    in = p.standardizer->apply(x);
  } else {
    in = x.cast<float>();
  }
  Rng init(cfg.seed, stream + "/init");
  p.mlp = std::make_unique<ProbeMlp>(x.rows(), cfg.hidden, static_cast<Index>(p.classes.size()), init);
  nn::Adam<float> opt(p.mlp->parameters(), nn::AdamOptions{.lr = cfg.lr});
  Rng data(cfg.seed, stream + "/data");
  const Index n = x.cols();
  const Index b = std::min<Index>(cfg.batch, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::size_t cursor = order.size();
  Mat<float> xb(x.rows(), b);
  std::vector<int> yb(static_cast<std::size_t>(b));
  for (std::int64_t it = 0; it < cfg.iterations; ++it) {
    for (Index j = 0; j < b; ++j) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), data.engine());
        cursor = 0;
      }
      const Index k = order[cursor++];
      xb.col(j) = in.col(k);
      yb[static_cast<std::size_t>(j)] = labels[static_cast<std::size_t>(k)];
    }
    opt.zero_grad();
    const Mat<float> logits = p.mlp->forward(xb);
    const float loss = nn::cross_entropy_batch(logits, yb);
    if (!std::isfinite(loss)) throw TrainingError("non-finite probe loss at iteration " + std::to_string(it + 1));
    p.mlp->backward(nn::cross_entropy_batch_grad(logits, yb));
    opt.step();
  }
  return p;
}

// Utterance code vectors for a fold: fold id and utterance id -> vector.
using ProbeFeatureFn = std::function<std::vector<double>(int fold_id, const std::string& utterance_id)>;
using SpeakerFn = std::function<std::string(const std::string&)>;

inline Mat<double> stack_features(const ProbeFeatureFn& feat, int fold_id, const std::vector<std::string>& ids) {
  Mat<double> x;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto v = feat(fold_id, ids[i]);
    if (i == 0) x.resize(static_cast<Index>(v.size()), static_cast<Index>(ids.size()));
    if (static_cast<Index>(v.size()) != x.rows()) throw DataError("probe feature width changed at " + ids[i]);
    x.col(static_cast<Index>(i)) = Eigen::Map<const Vec<double>>(v.data(), x.rows());
  }
  return x;
}

// Trains and scores one probe per fold. Speakers are indexed in sorted
// order of their ids within each fold's training set. With
// shuffle_labels, training labels are permuted (seeded) to give the chance
// baseline.
inline eval::MetricsReport run_probe(const std::vector<FoldSpec>& folds, const ProbeFeatureFn& feat,
                                     const SpeakerFn& speaker_of, const ProbeConfig& cfg,
                                     bool shuffle_labels = false) {
  for (const auto& fold : folds) {
    std::set<std::string> spk;
    for (const auto& id : fold.train_ids) spk.insert(speaker_of(id));
    if (spk.size() < 2)
      throw DataError("speaker probe needs at least 2 speakers, fold " + std::to_string(fold.fold_id) + " has " +
                      std::to_string(spk.size()));
  }
  eval::MetricsReport report;
  report.task = "speaker-id";
  report.info["probe"] = to_json(cfg);
  report.info["shuffled_labels"] = shuffle_labels;
  for (const auto& fold : folds) {
    eval::FoldResult r;
    r.fold_id = fold.fold_id;
    r.n_train = fold.train_ids.size();
    r.n_test = fold.test_ids.size();
    try {
      validate_fold(fold);
      std::set<std::string> spk;
      for (const auto& id : fold.train_ids) spk.insert(speaker_of(id));
      std::vector<std::string> classes(spk.begin(), spk.end());
      std::map<std::string, int> index;
      for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = static_cast<int>(i);
      auto label = [&](const std::string& id) {
        auto it = index.find(speaker_of(id));
        if (it == index.end()) throw DataError("test speaker of " + id + " has no training utterances");
        return it->second;
      };
      std::vector<int> y;
      for (const auto& id : fold.train_ids) y.push_back(label(id));
      if (shuffle_labels) {
        Rng shuf(cfg.seed, "probe-shuffle/" + std::to_string(fold.fold_id));
        std::shuffle(y.begin(), y.end(), shuf.engine());
      }
      const auto probe = train_probe(stack_features(feat, fold.fold_id, fold.train_ids), y, classes, cfg,
                                     "probe/" + std::to_string(fold.fold_id));
      const auto preds = probe.predict(stack_features(feat, fold.fold_id, fold.test_ids));
      std::vector<int> truth;
      for (const auto& id : fold.test_ids) truth.push_back(label(id));
      r.confusion = eval::ConfusionMatrix(preds, truth, static_cast<int>(classes.size()));
      r.macro_recall = r.confusion.macro_recall();
      r.overall_accuracy = r.confusion.overall_accuracy();
      if (report.class_names.empty()) report.class_names = classes;
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
    report.folds.push_back(std::move(r));
  }
  report.finalize();
  return report;
}

}  // namespace emorec::probe
