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

#include <gtest/gtest.h>

#include <cmath>

#include "emorec/nn/adam.hpp"
#include "emorec/nn/layers.hpp"
#include "emorec/nn/loss.hpp"
#include "emorec/nn/lstm.hpp"
#include "emorec/nn/ops.hpp"
#include "grad_check.hpp"

namespace {

using emorec::Rng;
using emorec::nn::Index;
using emorec::nn::Mat;
using emorec::nn::SeqShape;
using emorec::nn::Vec;
using emorec::testing::numeric_grad;
using emorec::testing::random_mat;
using emorec::testing::rel_error;

constexpr double kTol = 1e-3;

// Checks every trainable parameter and the input gradient of a layer through
// the scalar loss sum(R .* f(x)).
// A column mask zeroes R where the layer's backward expects no gradient.
template <class Layer, class Fwd>
void check_layer(Layer& layer, Mat<double>& x, Fwd fwd, Rng& rng,
                 const Vec<double>* col_mask = nullptr) {
  Mat<double> probe = fwd(layer, x);
  Mat<double> r = random_mat(probe.rows(), probe.cols(), rng);
  if (col_mask) r = r.array().rowwise() * col_mask->transpose().array();
  auto loss = [&] { return fwd(layer, x).cwiseProduct(r).sum(); };

  emorec::nn::ParamList<double> params;
  layer.collect(params);
  for (auto* p : params) p->zero_grad();
  fwd(layer, x);
  const Mat<double> dx = layer.backward(r);

  for (auto* p : params) {
    if (!p->trainable) continue;
    const Mat<double> numeric = numeric_grad(p->value, loss);
    EXPECT_LT(rel_error(p->grad, numeric), kTol) << p->name;
  }
  EXPECT_LT(rel_error(dx, numeric_grad(x, loss)), kTol) << "input";
}

TEST(Layers, LinearGradients) {
  Rng rng(1);
  emorec::nn::Linear<double> lin(5, 3, "lin", rng);
  Mat<double> x = random_mat(5, 7, rng);
  check_layer(lin, x, [](auto& l, const Mat<double>& in) { return l.forward(in); }, rng);
}

TEST(Layers, ConvGradients) {
  Rng rng(2);
  const SeqShape s{2, 6};
  emorec::nn::Conv1d<double> conv(3, 4, 5, "conv", rng);
  Mat<double> x = random_mat(3, s.frames(), rng);
  check_layer(conv, x, [&](auto& l, const Mat<double>& in) { return l.forward(in, s); }, rng);
}

TEST(Layers, ConvMatchesDirectLoop) {
  Rng rng(3);
  const SeqShape s{2, 5};
  emorec::nn::Conv1d<double> conv(2, 3, 3, "conv", rng);
  const Mat<double> x = random_mat(2, s.frames(), rng);
  const Mat<double> y = conv.apply(x, s);
  const Mat<double>& w = conv.weight().value;
  for (Index b = 0; b < s.batch; ++b)
    for (Index t = 0; t < s.time; ++t)
      for (Index o = 0; o < 3; ++o) {
        double acc = conv.bias().value(o, 0);
        for (Index k = 0; k < 3; ++k) {
          const Index src = t + k - 1;
          if (src < 0 || src >= s.time) continue;
          for (Index c = 0; c < 2; ++c) acc += w(o, k * 2 + c) * x(c, src * s.batch + b);
        }
        EXPECT_NEAR(y(o, t * s.batch + b), acc, 1e-12);
      }
}

TEST(Layers, BatchNormTrainingGradients) {
  Rng rng(4);
  emorec::nn::BatchNorm<double> bn(3, "bn");
  Mat<double> x = random_mat(3, 8, rng);
  check_layer(bn, x, [](auto& l, const Mat<double>& in) { return l.forward(in, true); }, rng);
}

TEST(Layers, BatchNormMaskedGradients) {
  Rng rng(5);
  emorec::nn::BatchNorm<double> bn(3, "bn");
  Vec<double> mask(8);
  mask << 1, 1, 0, 1, 1, 0, 1, 0;
  Mat<double> x = random_mat(3, 8, rng);
  check_layer(bn, x, [&](auto& l, const Mat<double>& in) { return l.forward(in, true, &mask); },
              rng, &mask);
}

TEST(Layers, BatchNormEvalApplyMatchesForward) {
  Rng rng(6);
  emorec::nn::BatchNorm<float> bn(4, "bn");
  Mat<float> x = random_mat(4, 10, rng).cast<float>();
  bn.forward(x, true);
  bn.forward(x * 2.0f, true);
  const Mat<float> a = bn.forward(x, false);
  const Mat<float> b = bn.apply(x);
  EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Layers, ConvNormGradients) {
  Rng rng(7);
  const SeqShape s{2, 5};
  for (auto act : {emorec::nn::Activation::kTanh, emorec::nn::Activation::kNone}) {
    emorec::nn::ConvNorm<double> block(3, 4, 3, act, "cn", rng);
    Mat<double> x = random_mat(3, s.frames(), rng);
    check_layer(block, x, [&](auto& l, const Mat<double>& in) { return l.forward(in, s, true); },
                rng);
  }
}

TEST(Recurrent, LstmGradientsBothDirections) {
  for (bool reverse : {false, true}) {
    Rng rng(reverse ? 9 : 8);
    const SeqShape s{2, 4};
    emorec::nn::Lstm<double> lstm(3, 4, reverse, "lstm", rng);
    Mat<double> x = random_mat(3, s.frames(), rng);
    check_layer(lstm, x, [&](auto& l, const Mat<double>& in) { return l.forward(in, s); }, rng);
  }
}

TEST(Recurrent, BlstmGradients) {
  Rng rng(10);
  const SeqShape s{1, 5};
  emorec::nn::Blstm<double> lstm(2, 3, "blstm", rng);
  Mat<double> x = random_mat(2, s.frames(), rng);
  check_layer(lstm, x, [&](auto& l, const Mat<double>& in) { return l.forward(in, s); }, rng);
}

TEST(Recurrent, LstmSingleStepMatchesGateFormula) {
  Rng rng(11);
  emorec::nn::Lstm<double> lstm(2, 3, false, "lstm", rng);
  const Mat<double> x = random_mat(2, 1, rng);
  const Mat<double> h = lstm.apply(x, SeqShape{1, 1});
  const Vec<double> g = lstm.wx().value * x + lstm.bias().value;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (Index k = 0; k < 3; ++k) {
    const double c = sig(g(k)) * std::tanh(g(6 + k));
    EXPECT_NEAR(h(k, 0), sig(g(9 + k)) * std::tanh(c), 1e-12);
  }
}

TEST(Recurrent, ReverseLstmSeesFutureFrames) {
  Rng rng(12);
  const SeqShape s{1, 4};
  emorec::nn::Lstm<double> fwd(2, 3, false, "f", rng);
  emorec::nn::Lstm<double> bwd(2, 3, true, "b", rng);
  Mat<double> x = random_mat(2, 4, rng);
  const Mat<double> f0 = fwd.apply(x, s), b0 = bwd.apply(x, s);
  x.col(3).setConstant(5.0);
  const Mat<double> f1 = fwd.apply(x, s), b1 = bwd.apply(x, s);
  EXPECT_EQ((f0.col(0) - f1.col(0)).norm(), 0.0);
  EXPECT_GT((b0.col(0) - b1.col(0)).norm(), 0.0);
}

TEST(Ops, DownUpSampleShapesAndGradients) {
  const SeqShape s{2, 6};
  Rng rng(13);
  const Mat<double> x = random_mat(3, s.frames(), rng);
  const Mat<double> d = emorec::nn::downsample_time(x, s, 3);
  ASSERT_EQ(d.cols(), 4);
  EXPECT_EQ(d.col(2), x.col(6));
  const Mat<double> u = emorec::nn::upsample_time(d, SeqShape{2, 2}, 3);
  for (Index t = 0; t < 6; ++t)
    for (Index b = 0; b < 2; ++b) EXPECT_EQ(u.col(t * 2 + b), x.col((t / 3) * 3 * 2 + b));
  EXPECT_EQ(emorec::nn::downsample_time(u, s, 3), d);
  EXPECT_THROW(emorec::nn::downsample_time(x, s, 4), emorec::UsageError);

  const Mat<double> r = random_mat(3, 4, rng);
  const Mat<double> dx = emorec::nn::downsample_time_backward(r, s, 3);
  EXPECT_NEAR(dx.cwiseProduct(x).sum(), r.cwiseProduct(d).sum(), 1e-12);
  const Mat<double> ru = random_mat(3, 12, rng);
  const Mat<double> dd = emorec::nn::upsample_time_backward(ru, SeqShape{2, 2}, 3);
  EXPECT_NEAR(dd.cwiseProduct(d).sum(), ru.cwiseProduct(u).sum(), 1e-12);
}

TEST(Ops, MeanAndBroadcastAreAdjoint) {
  const SeqShape s{3, 4};
  Rng rng(14);
  const Mat<double> x = random_mat(2, s.frames(), rng);
  const Mat<double> v = random_mat(2, 3, rng);
  const Mat<double> m = emorec::nn::time_mean(x, s);
  EXPECT_NEAR(m.cwiseProduct(v).sum(),
              x.cwiseProduct(emorec::nn::time_mean_backward(v, s)).sum(), 1e-12);
  const Mat<double> bc = emorec::nn::broadcast_time(v, s);
  EXPECT_NEAR(bc.cwiseProduct(x).sum(),
              v.cwiseProduct(emorec::nn::broadcast_time_backward(x, s)).sum(), 1e-12);
}

TEST(Ops, MaxPoolRespectsLengths) {
  const SeqShape s{2, 3};
  Mat<double> x(1, 6);
  // columns: t0b0 t0b1 t1b0 t1b1 t2b0 t2b1
  x << 1, 4, 2, 0, 9, 9;
  emorec::nn::TimeMaxPool<double> pool;
  const Mat<double> y = pool.forward(x, s, {2, 1});
  EXPECT_EQ(y(0, 0), 2.0);
  EXPECT_EQ(y(0, 1), 4.0);
  Mat<double> dy(1, 2);
  dy << 1, 1;
  const Mat<double> dx = pool.backward(dy);
  EXPECT_EQ(dx(0, 2), 1.0);
  EXPECT_EQ(dx(0, 1), 1.0);
  EXPECT_EQ(dx.sum(), 2.0);
}

TEST(Loss, CrossEntropyGradientMatchesFiniteDifference) {
  Rng rng(15);
  Mat<double> z = random_mat(4, 3, rng);
  const std::vector<int> labels{0, 3, 2};
  const Mat<double> g = emorec::nn::cross_entropy_batch_grad(z, labels);
  auto loss = [&] { return emorec::nn::cross_entropy_batch(z, labels); };
  EXPECT_LT(rel_error(g, numeric_grad(z, loss)), kTol);
}

TEST(Loss, MseGradientMatchesFiniteDifference) {
  Rng rng(16);
  Mat<double> x = random_mat(3, 5, rng);
  const Mat<double> y = random_mat(3, 5, rng);
  auto loss = [&] { return emorec::nn::mse_loss(x, y); };
  EXPECT_LT(rel_error(emorec::nn::mse_loss_grad(x, y), numeric_grad(x, loss)), kTol);
}

TEST(Loss, CrossEntropyIsStableForHugeLogits) {
  Vec<double> z(4);
  z << 1000.0, 0.0, -1000.0, 0.0;
  EXPECT_NEAR(emorec::nn::cross_entropy(z, 0), 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(emorec::nn::cross_entropy(z, 2)));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  emorec::nn::Param<double> p;
  p.init("p", 2, 1);
  p.value << 1.0, -1.0;
  p.grad << 0.5, -3.0;
  emorec::nn::Adam<double> opt({&p}, {.lr = 0.01});
  opt.step();
  // m_hat = g, v_hat = g^2, so the first step is lr * sign(g) up to eps.
  EXPECT_NEAR(p.value(0), 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value(1), -1.0 + 0.01, 1e-9);
}

TEST(Adam, MatchesReferenceRecurrence) {
  emorec::nn::Param<double> p;
  p.init("p", 1, 1);
  emorec::nn::Adam<double> opt({&p}, {.lr = 0.1});
  double x = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 5; ++t) {
    const double g = 2.0 * (x - 3.0);
    p.grad(0, 0) = g;
    opt.step();
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    x -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p.value(0, 0), x, 1e-12);
  }
}

}  // namespace
