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
#include <span>
#include <string>
#include <vector>

#include "emorec/nn/tensor.hpp"

namespace emorec::ser {

using nn::Index;
using nn::Mat;

inline constexpr double kMinAlphaSum = 1e-6;

// h = sum_i a_i H_i / sum_i a_i over a [layers, frames, dim] row-major stack;
// returns [frames, dim] row-major.
inline std::vector<float> weighted_layer_average(std::span<const float> stack, Index layers,
                                                 Index frames, Index dim,
                                                 std::span<const double> alpha) {
  if (static_cast<Index>(alpha.size()) != layers) throw UsageError("alpha has the wrong length");
  if (static_cast<Index>(stack.size()) != layers * frames * dim) throw UsageError("stack size mismatch");
  double sum = 0.0;
  for (double a : alpha) sum += a;
  if (std::abs(sum) < kMinAlphaSum) throw UsageError("layer weights sum to (almost) zero");
  std::vector<double> acc(static_cast<std::size_t>(frames * dim), 0.0);
  for (Index l = 0; l < layers; ++l) {
    const float* src = stack.data() + l * frames * dim;
    const double a = alpha[static_cast<std::size_t>(l)];
    for (Index k = 0; k < frames * dim; ++k) acc[static_cast<std::size_t>(k)] += a * src[k];
  }
  std::vector<float> out(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k] / sum);
  return out;
}

// Trainable layer weighting. Inputs are the per-layer activations of a batch,
// each [dim, frames]; forward() keeps a pointer to them for backward(), so
// they must outlive the step.
template <class T>
class LayerAverage {
 public:
  LayerAverage() = default;
  explicit LayerAverage(Index layers, const std::string& name = "alpha") {
    alpha_.init(name, layers, 1);
    alpha_.value.setOnes();
  }

  Index layers() const { return alpha_.value.rows(); }

  Mat<T> forward(const std::vector<Mat<T>>& h) {
    inputs_ = &h;
    out_ = apply(h);
    return out_;
  }

  Mat<T> apply(const std::vector<Mat<T>>& h) const {
    nn::check_shape(static_cast<Index>(h.size()) == layers(), "layer stack depth");
    const T sum = alpha_.value.sum();
    if (std::abs(static_cast<double>(sum)) < kMinAlphaSum)
      throw TrainingError("layer weights sum below guard threshold");
    Mat<T> acc = alpha_.value(0, 0) * h[0];
    for (Index l = 1; l < layers(); ++l) acc.noalias() += alpha_.value(l, 0) * h[static_cast<std::size_t>(l)];
    return acc / sum;
  }

  // d h / d a_i = (H_i - h) / sum(a)
  void backward(const Mat<T>& dh) {
    const T sum = alpha_.value.sum();
    const T base = dh.cwiseProduct(out_).sum();
    for (Index l = 0; l < layers(); ++l)
      alpha_.grad(l, 0) += (dh.cwiseProduct((*inputs_)[static_cast<std::size_t>(l)]).sum() - base) / sum;
  }

  // Shifts every weight by the same amount so they sum to 1 when the sum has
  // collapsed towards 0. Returns true when the shift happened.
  bool guard() {
    const double sum = static_cast<double>(alpha_.value.sum());
    if (std::abs(sum) >= kMinAlphaSum) return false;
    alpha_.value.array() += static_cast<T>((1.0 - sum) / static_cast<double>(layers()));
    return true;
  }

  void collect(nn::ParamList<T>& out) { out.push_back(&alpha_); }
  nn::Param<T>& alpha() { return alpha_; }
  const nn::Param<T>& alpha() const { return alpha_; }

 private:
  nn::Param<T> alpha_;
  const std::vector<Mat<T>>* inputs_ = nullptr;
  Mat<T> out_;
};

}  // namespace emorec::ser
