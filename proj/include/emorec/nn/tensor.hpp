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

#include <Eigen/Core>
#include <string>
#include <vector>

#include "emorec/common/error.hpp"
#include "emorec/common/rng.hpp"

namespace emorec::nn {

using Index = Eigen::Index;

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Activations are stored as [channels, time * batch] with time-major columns:
// column n = t * batch + b. A time step is then a contiguous block of
// batch columns, which keeps recurrences and temporal shifts cheap.
struct SeqShape {
  Index batch = 1;
  Index time = 1;
  Index frames() const { return batch * time; }
  bool operator==(const SeqShape&) const = default;
};

template <class T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
  bool trainable = true;

  void init(std::string n, Index rows, Index cols, bool train = true) {
    name = std::move(n);
    value = Mat<T>::Zero(rows, cols);
    grad = Mat<T>::Zero(rows, cols);
    trainable = train;
  }
  void zero_grad() { grad.setZero(); }
};

template <class T>
using ParamList = std::vector<Param<T>*>;

template <class T>
void uniform_init(Mat<T>& m, double bound, Rng& rng) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      m(i, j) = static_cast<T>(rng.uniform(-bound, bound));
}

inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw UsageError("shape mismatch: " + what);
}

}  // namespace emorec::nn
