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
#include <map>
#include <string>

#include "emorec/nn/tensor.hpp"

namespace emorec::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with the same update arithmetic as torch.optim.Adam (no weight decay).
template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamList<T> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
    for (Param<T>* p : params_) {
      if (!p->trainable) continue;
      m_[p->name] = Mat<T>::Zero(p->value.rows(), p->value.cols());
      v_[p->name] = Mat<T>::Zero(p->value.rows(), p->value.cols());
    }
  }

  void zero_grad() {
    for (Param<T>* p : params_) p->zero_grad();
  }

  void step() {
    ++steps_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(steps_));
    const T step_size = static_cast<T>(opts_.lr / bc1);
    const T bc2_sqrt = static_cast<T>(std::sqrt(bc2));
    const T b1 = static_cast<T>(opts_.beta1);
    const T b2 = static_cast<T>(opts_.beta2);
    const T eps = static_cast<T>(opts_.eps);
    for (Param<T>* p : params_) {
      if (!p->trainable) continue;
      Mat<T>& m = m_[p->name];
      Mat<T>& v = v_[p->name];
      m = b1 * m + (T(1) - b1) * p->grad;
      v = b2 * v + (T(1) - b2) * p->grad.cwiseAbs2();
      auto denom = (v.array().sqrt() / bc2_sqrt) + eps;
      p->value.array() -= step_size * m.array() / denom;
    }
  }

  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t s) { steps_ = s; }
  std::map<std::string, Mat<T>>& first_moments() { return m_; }
  std::map<std::string, Mat<T>>& second_moments() { return v_; }
  AdamOptions& options() { return opts_; }

 private:
  ParamList<T> params_;
  AdamOptions opts_;
  std::map<std::string, Mat<T>> m_, v_;
  std::int64_t steps_ = 0;
};

}  // namespace emorec::nn
