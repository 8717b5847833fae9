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
#include <string>

#include "emorec/nn/tensor.hpp"

namespace emorec::nn {

// Single-direction LSTM with PyTorch gate order (i, f, g, o) and zero initial
// state. A reversed LSTM consumes the sequence from the last step backwards;
// its output is still indexed by the original time axis.
template <class T>
class Lstm {
 public:
  Lstm() = default;
  Lstm(Index in, Index hidden, bool reverse, const std::string& name, Rng& rng)
      : hidden_(hidden), reverse_(reverse) {
    wx_.init(name + ".wx", 4 * hidden, in);
    wh_.init(name + ".wh", 4 * hidden, hidden);
    b_.init(name + ".b", 4 * hidden, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    uniform_init(wx_.value, bound, rng);
    uniform_init(wh_.value, bound, rng);
    uniform_init(b_.value, bound, rng);
  }

  Index in_dim() const { return wx_.value.cols(); }
  Index hidden() const { return hidden_; }

  Mat<T> forward(const Mat<T>& x, SeqShape s) {
    check_shape(x.rows() == in_dim() && x.cols() == s.frames(),
                wx_.name + " input");
    x_ = x;
    shape_ = s;
    run(x, s, gates_, c_, tanh_c_, h_);
    return h_;
  }

  Mat<T> apply(const Mat<T>& x, SeqShape s) const {
    check_shape(x.rows() == in_dim() && x.cols() == s.frames(),
                wx_.name + " input");
    Mat<T> gates, c, tc, h;
    run(x, s, gates, c, tc, h);
    return h;
  }

  Mat<T> backward(const Mat<T>& dh_out) {
    const Index hd = hidden_;
    const Index b = shape_.batch;
    const Index steps = shape_.time;
    Mat<T> dgates(4 * hd, shape_.frames());
    Mat<T> h_prev = Mat<T>::Zero(hd, shape_.frames());
    Mat<T> dh_next = Mat<T>::Zero(hd, b);
    Mat<T> dc_next = Mat<T>::Zero(hd, b);
    for (Index step = steps - 1; step >= 0; --step) {
      const Index t = time_at(step);
      const Index col = t * b;
      auto gi = gates_.block(0, col, hd, b).array();
      auto gf = gates_.block(hd, col, hd, b).array();
      auto gg = gates_.block(2 * hd, col, hd, b).array();
      auto go = gates_.block(3 * hd, col, hd, b).array();
      auto tc = tanh_c_.middleCols(col, b).array();

      Mat<T> dh = dh_out.middleCols(col, b) + dh_next;
      Mat<T> c_prev = Mat<T>::Zero(hd, b);
      if (step > 0) {
        const Index tp = time_at(step - 1);
        c_prev = c_.middleCols(tp * b, b);
        h_prev.middleCols(col, b) = h_.middleCols(tp * b, b);
      }
      auto dha = dh.array();
      Mat<T> dc = (dha * go * (T(1) - tc.square())).matrix() + dc_next;
      auto dca = dc.array();
      dgates.block(0, col, hd, b) = (dca * gg * gi * (T(1) - gi)).matrix();
      dgates.block(hd, col, hd, b) =
          (dca * c_prev.array() * gf * (T(1) - gf)).matrix();
      dgates.block(2 * hd, col, hd, b) = (dca * gi * (T(1) - gg.square())).matrix();
      dgates.block(3 * hd, col, hd, b) = (dha * tc * go * (T(1) - go)).matrix();
      dc_next = (dca * gf).matrix();
      dh_next.noalias() = wh_.value.transpose() * dgates.middleCols(col, b);
    }
    wx_.grad.noalias() += dgates * x_.transpose();
    wh_.grad.noalias() += dgates * h_prev.transpose();
    b_.grad += dgates.rowwise().sum();
    return wx_.value.transpose() * dgates;
  }

  void collect(ParamList<T>& out) {
    out.push_back(&wx_);
    out.push_back(&wh_);
    out.push_back(&b_);
  }

  Param<T>& wx() { return wx_; }
  Param<T>& wh() { return wh_; }
  Param<T>& bias() { return b_; }

 private:
  Index time_at(Index step) const {
    return reverse_ ? shape_.time - 1 - step : step;
  }

  void run(const Mat<T>& x, SeqShape s, Mat<T>& gates, Mat<T>& c, Mat<T>& tc,
           Mat<T>& h) const {
    const Index hd = hidden_;
    const Index b = s.batch;
    gates.noalias() = wx_.value * x;
    gates.colwise() += b_.value.col(0);
    c.resize(hd, s.frames());
    tc.resize(hd, s.frames());
    h.resize(hd, s.frames());
    Mat<T> h_prev = Mat<T>::Zero(hd, b);
    Mat<T> c_prev = Mat<T>::Zero(hd, b);
    for (Index step = 0; step < s.time; ++step) {
      const Index t = reverse_ ? s.time - 1 - step : step;
      const Index col = t * b;
      auto g = gates.middleCols(col, b);
      g.noalias() += wh_.value * h_prev;
      auto sig = [](auto v) { return T(1) / (T(1) + (-v).exp()); };
      g.topRows(hd) = sig(g.topRows(hd).array()).matrix();
      g.middleRows(hd, hd) = sig(g.middleRows(hd, hd).array()).matrix();
      g.middleRows(2 * hd, hd) = g.middleRows(2 * hd, hd).array().tanh().matrix();
      g.bottomRows(hd) = sig(g.bottomRows(hd).array()).matrix();
      c.middleCols(col, b) =
          (g.middleRows(hd, hd).array() * c_prev.array() +
           g.topRows(hd).array() * g.middleRows(2 * hd, hd).array())
              .matrix();
      tc.middleCols(col, b) = c.middleCols(col, b).array().tanh().matrix();
      h.middleCols(col, b) =
          (g.bottomRows(hd).array() * tc.middleCols(col, b).array()).matrix();
      h_prev = h.middleCols(col, b);
      c_prev = c.middleCols(col, b);
    }
  }

  Index hidden_ = 0;
  bool reverse_ = false;
  Param<T> wx_, wh_, b_;
  Mat<T> x_, gates_, c_, tanh_c_, h_;
  SeqShape shape_;
};

// Bidirectional LSTM; output rows are [forward; backward], width 2 * hidden.
template <class T>
class Blstm {
 public:
  Blstm() = default;
  Blstm(Index in, Index hidden, const std::string& name, Rng& rng)
      : fwd_(in, hidden, false, name + ".fwd", rng),
        bwd_(in, hidden, true, name + ".bwd", rng) {}

  Index out_dim() const { return 2 * fwd_.hidden(); }

  Mat<T> forward(const Mat<T>& x, SeqShape s) {
    Mat<T> y(out_dim(), s.frames());
    y.topRows(fwd_.hidden()) = fwd_.forward(x, s);
    y.bottomRows(bwd_.hidden()) = bwd_.forward(x, s);
    return y;
  }

  Mat<T> apply(const Mat<T>& x, SeqShape s) const {
    Mat<T> y(out_dim(), s.frames());
    y.topRows(fwd_.hidden()) = fwd_.apply(x, s);
    y.bottomRows(bwd_.hidden()) = bwd_.apply(x, s);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> dx = fwd_.backward(dy.topRows(fwd_.hidden()));
    dx += bwd_.backward(dy.bottomRows(bwd_.hidden()));
    return dx;
  }

  void collect(ParamList<T>& out) {
    fwd_.collect(out);
    bwd_.collect(out);
  }

 private:
  Lstm<T> fwd_, bwd_;
};

}  // namespace emorec::nn
