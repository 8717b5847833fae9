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
#include <functional>

#include "emorec/nn/tensor.hpp"

namespace emorec::testing {

using nn::Mat;

// ||a - b|| / max(||a||, ||b||); falls back to the absolute error when both
// gradients are at round-off level (e.g. a conv bias feeding batch norm).
inline double rel_error(const Mat<double>& a, const Mat<double>& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale < 1e-6) return (a - b).norm();
  return (a - b).norm() / scale;
}

// Central finite differences of a scalar function with respect to `m`.
inline Mat<double> numeric_grad(Mat<double>& m, const std::function<double()>& loss,
                                double eps = 1e-4) {
  Mat<double> g(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double keep = m(i, j);
      m(i, j) = keep + eps;
      const double up = loss();
      m(i, j) = keep - eps;
      const double down = loss();
      m(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * eps);
    }
  return g;
}

inline Mat<double> random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Mat<double> m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal(0.0, scale);
  return m;
}

}  // namespace emorec::testing
