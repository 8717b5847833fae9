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

// Feed-forward building blocks with explicit forward/backward passes.
// Every layer caches what its backward pass needs during forward(); calling
// backward() accumulates into Param::grad and returns the input gradient.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "emorec/nn/tensor.hpp"

namespace emorec::nn {

template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(Index in, Index out, const std::string& name, Rng& rng) {
    w_.init(name + ".w", out, in);
    b_.init(name + ".b", out, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    uniform_init(w_.value, bound, rng);
    uniform_init(b_.value, bound, rng);
  }

  Index in_dim() const { return w_.value.cols(); }
  Index out_dim() const { return w_.value.rows(); }

  Mat<T> forward(const Mat<T>& x) {
    check_shape(x.rows() == in_dim(), w_.name + " input rows");
    x_ = x;
    Mat<T> y = w_.value * x;
    y.colwise() += b_.value.col(0);
    return y;
  }

  // Forward without caching; safe for concurrent read-only inference.
  Mat<T> apply(const Mat<T>& x) const {
    check_shape(x.rows() == in_dim(), w_.name + " input rows");
    Mat<T> y = w_.value * x;
    y.colwise() += b_.value.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    w_.grad.noalias() += dy * x_.transpose();
    b_.grad += dy.rowwise().sum();
    return w_.value.transpose() * dy;
  }

  void collect(ParamList<T>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
  }

  Param<T>& weight() { return w_; }
  Param<T>& bias() { return b_; }

 private:
  Param<T> w_, b_;
  Mat<T> x_;
};

// 1D convolution along time with "same" zero padding. Weights are laid out as
// [out, kernel * in] so the forward pass is a single GEMM over an im2col
// buffer whose row block k holds the input shifted by (k - kernel/2) steps.
template <class T>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Index in, Index out, Index kernel, const std::string& name, Rng& rng)
      : in_(in), kernel_(kernel) {
    if (kernel % 2 != 1) throw UsageError(name + ": kernel must be odd");
    w_.init(name + ".w", out, kernel * in);
    b_.init(name + ".b", out, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(kernel * in));
    uniform_init(w_.value, bound, rng);
    uniform_init(b_.value, bound, rng);
  }

  Index in_dim() const { return in_; }
  Index out_dim() const { return w_.value.rows(); }

  Mat<T> forward(const Mat<T>& x, SeqShape s) {
    check_shape(x.rows() == in_ && x.cols() == s.frames(),
                w_.name + " input");
    shape_ = s;
    im2col(x, s, cols_);
    Mat<T> y = w_.value * cols_;
    y.colwise() += b_.value.col(0);
    return y;
  }

  Mat<T> apply(const Mat<T>& x, SeqShape s) const {
    check_shape(x.rows() == in_ && x.cols() == s.frames(),
                w_.name + " input");
    Mat<T> cols;
    im2col(x, s, cols);
    Mat<T> y = w_.value * cols;
    y.colwise() += b_.value.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    w_.grad.noalias() += dy * cols_.transpose();
    b_.grad += dy.rowwise().sum();
    Mat<T> dcols = w_.value.transpose() * dy;
    Mat<T> dx = Mat<T>::Zero(in_, shape_.frames());
    const Index half = kernel_ / 2;
    const Index b = shape_.batch;
    for (Index k = 0; k < kernel_; ++k) {
      const Index shift = k - half;
      // cols[k block, t] = x[t + shift], so dx[t + shift] += dcols[k block, t]
      const Index t0 = std::max<Index>(0, -shift);
      const Index t1 = std::min<Index>(shape_.time, shape_.time - shift);
      if (t1 <= t0) continue;
      dx.middleCols((t0 + shift) * b, (t1 - t0) * b) +=
          dcols.block(k * in_, t0 * b, in_, (t1 - t0) * b);
    }
    return dx;
  }

  void collect(ParamList<T>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
  }

  Param<T>& weight() { return w_; }
  Param<T>& bias() { return b_; }

 private:
  void im2col(const Mat<T>& x, SeqShape s, Mat<T>& cols) const {
    const Index half = kernel_ / 2;
    const Index b = s.batch;
    cols.setZero(kernel_ * in_, s.frames());
    for (Index k = 0; k < kernel_; ++k) {
      const Index shift = k - half;
      const Index t0 = std::max<Index>(0, -shift);
      const Index t1 = std::min<Index>(s.time, s.time - shift);
      if (t1 <= t0) continue;
      cols.block(k * in_, t0 * b, in_, (t1 - t0) * b) =
          x.middleCols((t0 + shift) * b, (t1 - t0) * b);
    }
  }

  Index in_ = 0;
  Index kernel_ = 1;
  Param<T> w_, b_;
  Mat<T> cols_;
  SeqShape shape_;
};

// Batch normalization over channels. In training mode statistics are taken
// over all columns, or only over columns whose mask entry is 1 when a mask is
// given; running estimates use PyTorch's momentum and unbiased variance.
// With a mask, backward() expects dy to be zero on masked columns (ConvNorm
// guarantees this by masking its output).
template <class T>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(Index channels, const std::string& name) {
    gamma_.init(name + ".gamma", channels, 1);
    beta_.init(name + ".beta", channels, 1);
    running_mean_.init(name + ".running_mean", channels, 1, false);
    running_var_.init(name + ".running_var", channels, 1, false);
    gamma_.value.setOnes();
    running_var_.value.setOnes();
  }

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  Mat<T> forward(const Mat<T>& x, bool training, const Vec<T>* mask = nullptr) {
    training_ = training;
    const Index n = x.cols();
    if (training) {
      Vec<T> w = mask ? Vec<T>(*mask) : Vec<T>::Ones(n);
      const T count = w.sum();
      if (count < T(1)) throw TrainingError("batch norm over empty mask");
      mask_ = w;
      count_ = count;
      Vec<T> mean = (x * w) / count;
      Mat<T> centered = x.colwise() - mean;
      Vec<T> var = (centered.array().square().matrix() * w) / count;
      inv_std_ = (var.array() + T(kEps)).rsqrt().matrix();
      xhat_ = centered.array().colwise() * inv_std_.array();
      const T unbias = count > T(1) ? count / (count - T(1)) : T(1);
      running_mean_.value = (T(1) - T(kMomentum)) * running_mean_.value +
                            T(kMomentum) * mean;
      running_var_.value = (T(1) - T(kMomentum)) * running_var_.value +
                           T(kMomentum) * unbias * var;
    } else {
      inv_std_ = (running_var_.value.array() + T(kEps)).rsqrt().matrix();
      xhat_ = (x.colwise() - running_mean_.value.col(0)).array().colwise() *
              inv_std_.array();
    }
    Mat<T> y = xhat_.array().colwise() * gamma_.value.col(0).array();
    y.colwise() += beta_.value.col(0);
    return y;
  }

  Mat<T> apply(const Mat<T>& x) const {
    Vec<T> inv_std = (running_var_.value.array() + T(kEps)).rsqrt().matrix();
    Mat<T> xhat = (x.colwise() - running_mean_.value.col(0)).array().colwise() *
                  inv_std.array();
    Mat<T> y = xhat.array().colwise() * gamma_.value.col(0).array();
    y.colwise() += beta_.value.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    gamma_.grad += (dy.cwiseProduct(xhat_)).rowwise().sum();
    beta_.grad += dy.rowwise().sum();
    Mat<T> g = dy.array().colwise() * gamma_.value.col(0).array();
    if (!training_) return g.array().colwise() * inv_std_.array();
    // dx_n = s g_n - [n in S] (s / |S|) (sum_n g_n + xhat_n sum_n g_n xhat_n)
    Vec<T> sum_g = g.rowwise().sum();
    Vec<T> sum_gx = g.cwiseProduct(xhat_).rowwise().sum();
    Mat<T> corr = xhat_.array().colwise() * sum_gx.array();
    corr.colwise() += sum_g;
    corr = corr.array().rowwise() * (mask_.transpose().array() / count_);
    return (g - corr).array().colwise() * inv_std_.array();
  }

  void collect(ParamList<T>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }

 private:
  Param<T> gamma_, beta_, running_mean_, running_var_;
  Mat<T> xhat_;
  Vec<T> inv_std_;
  Vec<T> mask_;
  T count_ = T(0);
  bool training_ = false;
};

enum class Activation { kNone, kRelu, kTanh };

template <class T>
Mat<T> activate(const Mat<T>& x, Activation a) {
  switch (a) {
    case Activation::kRelu:
      return x.cwiseMax(T(0));
    case Activation::kTanh:
      return x.array().tanh().matrix();
    case Activation::kNone:
      break;
  }
  return x;
}

// Gradient through the activation given its output y.
template <class T>
Mat<T> activate_backward(const Mat<T>& dy, const Mat<T>& y, Activation a) {
  switch (a) {
    case Activation::kRelu:
      return (y.array() > T(0)).select(dy, T(0));
    case Activation::kTanh:
      return dy.cwiseProduct((T(1) - y.array().square()).matrix());
    case Activation::kNone:
      break;
  }
  return dy;
}

// Conv1d -> BatchNorm -> activation ("ConvNorm" block). An optional frame
// mask zeroes padded positions after the activation and restricts the batch
// statistics to valid frames.
template <class T>
class ConvNorm {
 public:
  ConvNorm() = default;
  ConvNorm(Index in, Index out, Index kernel, Activation act,
           const std::string& name, Rng& rng)
      : conv_(in, out, kernel, name + ".conv", rng),
        bn_(out, name + ".bn"),
        act_(act) {}

  Index out_dim() const { return conv_.out_dim(); }

  Mat<T> forward(const Mat<T>& x, SeqShape s, bool training,
                 const Vec<T>* mask = nullptr) {
    mask_ = mask ? *mask : Vec<T>();
    Mat<T> z = bn_.forward(conv_.forward(x, s), training, mask);
    y_ = activate(z, act_);
    if (mask) y_ = y_.array().rowwise() * mask->transpose().array();
    return y_;
  }

  Mat<T> apply(const Mat<T>& x, SeqShape s, const Vec<T>* mask = nullptr) const {
    Mat<T> y = activate(bn_.apply(conv_.apply(x, s)), act_);
    if (mask) y = y.array().rowwise() * mask->transpose().array();
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> g = dy;
    if (mask_.size() > 0) g = g.array().rowwise() * mask_.transpose().array();
    return conv_.backward(bn_.backward(activate_backward(g, y_, act_)));
  }

  void collect(ParamList<T>& out) {
    conv_.collect(out);
    bn_.collect(out);
  }

  Conv1d<T>& conv() { return conv_; }

 private:
  Conv1d<T> conv_;
  BatchNorm<T> bn_;
  Activation act_ = Activation::kRelu;
  Mat<T> y_;
  Vec<T> mask_;
};

}  // namespace emorec::nn
