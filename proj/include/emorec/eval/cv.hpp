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

#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emorec/data/folds.hpp"
#include "emorec/eval/metrics.hpp"
#include "emorec/features/cache.hpp"
#include "json.hpp"

namespace emorec::eval {

struct FoldResult {
  int fold_id = 0;
  bool failed = false;
  std::string error;
  double macro_recall = 0.0;
  double overall_accuracy = 0.0;
  ConfusionMatrix confusion;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_fitted = 0;  // distinct utterances the training step read
};

struct MetricsReport {
  std::string task = "emotion";
  std::vector<std::string> class_names;
  std::vector<FoldResult> folds;
  std::optional<MeanStd> macro_recall;
  std::optional<MeanStd> overall_accuracy;
  nlohmann::json info = nlohmann::json::object();

  bool any_failed() const {
    for (const auto& f : folds)
      if (f.failed) return true;
    return false;
  }

  // Aggregates over the folds; omitted when any fold failed.
  void finalize() {
    macro_recall.reset();
    overall_accuracy.reset();
    if (folds.empty() || any_failed()) return;
    std::vector<double> mr, oa;
    for (const auto& f : folds) {
      mr.push_back(f.macro_recall);
      oa.push_back(f.overall_accuracy);
    }
    macro_recall = mean_std(mr);
    overall_accuracy = mean_std(oa);
  }
};

// Raised when a training step reads an utterance outside its training set.
class LeakageError : public DataError {
 public:
  using DataError::DataError;
};

// FeatureSource view that only serves an allowed id set and records what
// was read. Training steps get this view, so any statistic they fit (N',
// mel range, feature standardization) can only be computed from train ids.
class AuditedFeatureSource final : public FeatureSource {
 public:
  AuditedFeatureSource(const FeatureSource& inner, const std::vector<std::string>& allowed, std::string what)
      : inner_(&inner), allowed_(allowed.begin(), allowed.end()), what_(std::move(what)) {}

  std::shared_ptr<const SpeechFeatureSet> speech(const std::string& id) const override {
    check(id);
    return inner_->speech(id);
  }
  std::shared_ptr<const TextFeatureSet> text(const std::string& id) const override {
    check(id);
    return inner_->text(id);
  }

  std::set<std::string> accessed() const {
    std::lock_guard<std::mutex> lock(mu_);
    return accessed_;
  }

 private:
  void check(const std::string& id) const {
    if (!allowed_.count(id)) throw LeakageError(what_ + " read utterance " + id + " outside its training set");
    std::lock_guard<std::mutex> lock(mu_);
    accessed_.insert(id);
  }

  const FeatureSource* inner_;
  std::set<std::string> allowed_;
  std::string what_;
  mutable std::mutex mu_;
  mutable std::set<std::string> accessed_;
};

using LabelFn = std::function<int(const std::string&)>;

// For every fold: train(fold, train_view) returns a model, then
// predict(model, fold.test_ids) returns one class per test id. Exceptions
// in either step mark the fold failed and the aggregate is omitted.
template <class TrainFn, class PredictFn>
MetricsReport run_cv(const std::vector<FoldSpec>& folds, const FeatureSource& src, const LabelFn& label_of,
                     int n_classes, TrainFn&& train, PredictFn&& predict, std::string task = "emotion") {
  MetricsReport report;
  report.task = std::move(task);
  for (const auto& fold : folds) {
    FoldResult r;
    r.fold_id = fold.fold_id;
    r.n_train = fold.train_ids.size();
    r.n_test = fold.test_ids.size();
    r.confusion = ConfusionMatrix(n_classes);
    try {
      validate_fold(fold);
      AuditedFeatureSource view(src, fold.train_ids, "fold " + std::to_string(fold.fold_id) + " training");
      auto model = train(fold, static_cast<const FeatureSource&>(view));
      r.n_fitted = view.accessed().size();
      const std::vector<int> preds = predict(model, fold.test_ids);
      if (preds.size() != fold.test_ids.size()) throw UsageError("predictor returned the wrong number of classes");
      std::vector<int> labels;
      for (const auto& id : fold.test_ids) labels.push_back(label_of(id));
      r.confusion = ConfusionMatrix(preds, labels, n_classes);
      r.macro_recall = r.confusion.macro_recall();
      r.overall_accuracy = r.confusion.overall_accuracy();
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
    report.folds.push_back(std::move(r));
  }
  report.finalize();
  return report;
}

// Report from per-fold scores alone (no confusion matrices), e.g. to
// recompute a published table's aggregate.
inline MetricsReport report_from_scores(const std::vector<double>& macro_recall,
                                        const std::vector<double>& overall_accuracy, std::string task = "emotion") {
  if (macro_recall.size() != overall_accuracy.size()) throw UsageError("score lists differ in length");
  MetricsReport r;
  r.task = std::move(task);
  for (std::size_t i = 0; i < macro_recall.size(); ++i) {
    FoldResult f;
    f.fold_id = static_cast<int>(i) + 1;
    f.macro_recall = macro_recall[i];
    f.overall_accuracy = overall_accuracy[i];
    r.folds.push_back(std::move(f));
  }
  r.finalize();
  return r;
}

}  // namespace emorec::eval
