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
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "emorec/common/error.hpp"

namespace emorec::eval {

// Square count matrix; rows are true classes, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int n_classes = 4)
      : n_(n_classes), counts_(static_cast<std::size_t>(n_classes * n_classes), 0) {
    if (n_classes < 1) throw UsageError("confusion matrix needs at least one class");
  }

  ConfusionMatrix(const std::vector<int>& preds, const std::vector<int>& labels, int n_classes = 4)
      : ConfusionMatrix(n_classes) {
    if (preds.size() != labels.size())
      throw UsageError("predictions (" + std::to_string(preds.size()) + ") and labels (" +
                       std::to_string(labels.size()) + ") differ in length");
    for (std::size_t i = 0; i < preds.size(); ++i) add(labels[i], preds[i]);
  }

  void add(int label, int pred) {
    if (label < 0 || label >= n_ || pred < 0 || pred >= n_)
      throw UsageError("class index out of range [0, " + std::to_string(n_) + ")");
    ++counts_[static_cast<std::size_t>(label * n_ + pred)];
  }

  int n_classes() const { return n_; }
  std::int64_t at(int label, int pred) const { return counts_[static_cast<std::size_t>(label * n_ + pred)]; }

  std::int64_t row_total(int label) const {
    std::int64_t s = 0;
    for (int p = 0; p < n_; ++p) s += at(label, p);
    return s;
  }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  std::int64_t correct() const {
    std::int64_t s = 0;
    for (int k = 0; k < n_; ++k) s += at(k, k);
    return s;
  }

  // Mean recall over the classes present in the labels, in percent.
  double macro_recall() const {
    if (total() == 0) throw UsageError("macro recall of an empty set");
    double sum = 0.0;
    int present = 0;
    for (int k = 0; k < n_; ++k) {
      const auto n = row_total(k);
      if (n == 0) continue;
      sum += static_cast<double>(at(k, k)) / static_cast<double>(n);
      ++present;
    }
    return 100.0 * sum / present;
  }

  double overall_accuracy() const {
    if (total() == 0) throw UsageError("accuracy of an empty set");
    return 100.0 * static_cast<double>(correct()) / static_cast<double>(total());
  }

  std::vector<std::vector<std::int64_t>> rows() const {
    std::vector<std::vector<std::int64_t>> r(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) r[static_cast<std::size_t>(i)].push_back(at(i, j));
    return r;
  }

 private:
  int n_;
  std::vector<std::int64_t> counts_;
};

inline double macro_recall(const std::vector<int>& preds, const std::vector<int>& labels, int n_classes = 4) {
  if (preds.empty()) throw UsageError("macro recall of an empty set");
  return ConfusionMatrix(preds, labels, n_classes).macro_recall();
}

inline double overall_accuracy(const std::vector<int>& preds, const std::vector<int>& labels, int n_classes = 4) {
  if (preds.empty()) throw UsageError("accuracy of an empty set");
  return ConfusionMatrix(preds, labels, n_classes).overall_accuracy();
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) throw UsageError("aggregate of no values");
  MeanStd r;
  r.n = v.size();
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

// "70.1 ± 2.3"
inline std::string format_mean_std(const MeanStd& m, int decimals = 1) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", decimals, m.mean, decimals, m.std);
  return buf;
}

}  // namespace emorec::eval
