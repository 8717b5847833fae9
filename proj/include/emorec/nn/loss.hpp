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
#include <vector>

#include "emorec/nn/tensor.hpp"

namespace emorec::nn {

// Mean squared error averaged over every element of the batch tensor.
template <class T>
T mse_loss(const Mat<T>& x, const Mat<T>& y) {
  check_shape(x.rows() == y.rows() && x.cols() == y.cols(), "mse operands");
  if (x.size() == 0) return T(0);
  return (x - y).squaredNorm() / static_cast<T>(x.size());
}

template <class T>
Mat<T> mse_loss_grad(const Mat<T>& x, const Mat<T>& y) {
  return (T(2) / static_cast<T>(x.size())) * (x - y);
}

// Column-wise softmax with max-shift.
template <class T>
Mat<T> softmax(const Mat<T>& logits) {
  Mat<T> p(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    const T m = logits.col(j).maxCoeff();
    p.col(j) = (logits.col(j).array() - m).exp().matrix();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

// -log softmax(z)[c] for one logit vector, computed as
// log(sum_j exp(z_j - max)) - (z_c - max).
template <class T>
T cross_entropy(const Vec<T>& z, int c) {
  if (c < 0 || c >= z.size()) throw UsageError("class index out of range");
  const T m = z.maxCoeff();
  const T lse = std::log((z.array() - m).exp().sum());
  return lse - (z(c) - m);
}

// Mean cross entropy over the columns of a [classes, batch] logit matrix.
template <class T>
T cross_entropy_batch(const Mat<T>& logits, const std::vector<int>& labels) {
  check_shape(static_cast<Index>(labels.size()) == logits.cols(), "labels");
  T total = T(0);
  for (Index j = 0; j < logits.cols(); ++j)
    total += cross_entropy<T>(logits.col(j), labels[static_cast<std::size_t>(j)]);
  return total / static_cast<T>(logits.cols());
}

template <class T>
Mat<T> cross_entropy_batch_grad(const Mat<T>& logits,
                                const std::vector<int>& labels) {
  Mat<T> g = softmax(logits);
  for (Index j = 0; j < logits.cols(); ++j)
    g(labels[static_cast<std::size_t>(j)], j) -= T(1);
  return g / static_cast<T>(logits.cols());
}

}  // namespace emorec::nn
