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

// Parameter-free temporal operations on time-major [C, time * batch] arrays.

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "emorec/nn/tensor.hpp"

namespace emorec::nn {

// Keeps the frames at t = 0, f, 2f, ...
template <class T>
Mat<T> downsample_time(const Mat<T>& x, SeqShape s, Index f) {
  if (f < 1 || s.time % f != 0)
    throw UsageError("downsample factor " + std::to_string(f) +
                     " does not divide " + std::to_string(s.time) + " frames");
  check_shape(x.cols() == s.frames(), "downsample input");
  const Index out_t = s.time / f;
  Mat<T> y(x.rows(), out_t * s.batch);
  for (Index j = 0; j < out_t; ++j)
    y.middleCols(j * s.batch, s.batch) = x.middleCols(j * f * s.batch, s.batch);
  return y;
}

template <class T>
Mat<T> downsample_time_backward(const Mat<T>& dy, SeqShape in_shape, Index f) {
  Mat<T> dx = Mat<T>::Zero(dy.rows(), in_shape.frames());
  const Index out_t = in_shape.time / f;
  for (Index j = 0; j < out_t; ++j)
    dx.middleCols(j * f * in_shape.batch, in_shape.batch) =
        dy.middleCols(j * in_shape.batch, in_shape.batch);
  return dx;
}

// Repeats every frame f times: row t of the result is frame floor(t / f).
template <class T>
Mat<T> upsample_time(const Mat<T>& x, SeqShape s, Index f) {
  if (f < 1) throw UsageError("upsample factor must be >= 1");
  check_shape(x.cols() == s.frames(), "upsample input");
  Mat<T> y(x.rows(), s.frames() * f);
  for (Index t = 0; t < s.time * f; ++t)
    y.middleCols(t * s.batch, s.batch) = x.middleCols((t / f) * s.batch, s.batch);
  return y;
}

template <class T>
Mat<T> upsample_time_backward(const Mat<T>& dy, SeqShape in_shape, Index f) {
  Mat<T> dx = Mat<T>::Zero(dy.rows(), in_shape.frames());
  for (Index t = 0; t < in_shape.time * f; ++t)
    dx.middleCols((t / f) * in_shape.batch, in_shape.batch) +=
        dy.middleCols(t * in_shape.batch, in_shape.batch);
  return dx;
}

// Mean over time: [C, time * batch] -> [C, batch].
template <class T>
Mat<T> time_mean(const Mat<T>& x, SeqShape s) {
  check_shape(x.cols() == s.frames(), "time_mean input");
  Mat<T> y = Mat<T>::Zero(x.rows(), s.batch);
  for (Index t = 0; t < s.time; ++t) y += x.middleCols(t * s.batch, s.batch);
  return y / static_cast<T>(s.time);
}

template <class T>
Mat<T> time_mean_backward(const Mat<T>& dy, SeqShape s) {
  Mat<T> dx(dy.rows(), s.frames());
  const Mat<T> g = dy / static_cast<T>(s.time);
  for (Index t = 0; t < s.time; ++t) dx.middleCols(t * s.batch, s.batch) = g;
  return dx;
}

// Per-item vectors [C, batch] repeated over every time step.
template <class T>
Mat<T> broadcast_time(const Mat<T>& v, SeqShape s) {
  check_shape(v.cols() == s.batch, "broadcast_time input");
  Mat<T> y(v.rows(), s.frames());
  for (Index t = 0; t < s.time; ++t) y.middleCols(t * s.batch, s.batch) = v;
  return y;
}

template <class T>
Mat<T> broadcast_time_backward(const Mat<T>& dy, SeqShape s) {
  Mat<T> dv = Mat<T>::Zero(dy.rows(), s.batch);
  for (Index t = 0; t < s.time; ++t) dv += dy.middleCols(t * s.batch, s.batch);
  return dv;
}

// Max over the valid time steps of every item; lengths[b] <= s.time and >= 1.
template <class T>
class TimeMaxPool {
 public:
  Mat<T> forward(const Mat<T>& x, SeqShape s, const std::vector<Index>& lengths) {
    check_shape(x.cols() == s.frames() &&
                    static_cast<Index>(lengths.size()) == s.batch,
                "max-pool input");
    shape_ = s;
    argmax_.assign(static_cast<std::size_t>(x.rows() * s.batch), 0);
    Mat<T> y(x.rows(), s.batch);
    for (Index b = 0; b < s.batch; ++b) {
      const Index len = lengths[static_cast<std::size_t>(b)];
      if (len < 1 || len > s.time) throw UsageError("max-pool length out of range");
      for (Index c = 0; c < x.rows(); ++c) {
        T best = -std::numeric_limits<T>::infinity();
        Index arg = 0;
        for (Index t = 0; t < len; ++t) {
          const T v = x(c, t * s.batch + b);
          if (v > best) {
            best = v;
            arg = t;
          }
        }
        y(c, b) = best;
        argmax_[static_cast<std::size_t>(b * x.rows() + c)] = arg;
      }
    }
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) const {
    Mat<T> dx = Mat<T>::Zero(dy.rows(), shape_.frames());
    for (Index b = 0; b < shape_.batch; ++b)
      for (Index c = 0; c < dy.rows(); ++c) {
        const Index t = argmax_[static_cast<std::size_t>(b * dy.rows() + c)];
        dx(c, t * shape_.batch + b) = dy(c, b);
      }
    return dx;
  }

 private:
  SeqShape shape_;
  std::vector<Index> argmax_;
};

}  // namespace emorec::nn
