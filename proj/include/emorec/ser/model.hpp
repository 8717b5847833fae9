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

// Speech emotion model: layer-weighted wav2vec average + speaker embedding
// -> ConvNorm prenet -> BLSTM stack -> temporal downsampling (the bottleneck
// codes). From the codes a decoder, conditioned on the speaker embedding and
// a phone-sequence summary, reconstructs the mel-spectrogram, and a small
// classifier predicts the emotion.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emorec/nn/layers.hpp"
#include "emorec/nn/loss.hpp"
#include "emorec/nn/lstm.hpp"
#include "emorec/nn/ops.hpp"
#include "emorec/ser/config.hpp"
#include "emorec/ser/layer_average.hpp"

namespace emorec::ser {

using nn::SeqShape;
using nn::Vec;

// One batch of 96-frame segments in time-major layout (column t * B + b).
template <class T>
struct SegmentBatch {
  Index batch = 0;
  std::vector<Mat<T>> layers;          // per layer [feature_dim, 96 B]
  Mat<T> speaker;                      // [speaker_dim, B]
  Mat<T> mel_target;                   // [mel_bins, 96 B]
  std::vector<std::int32_t> phone_ids;  // [96 B]
  std::vector<int> labels;             // [B]

  SeqShape shape() const { return {batch, kSegmentFrames}; }
};

template <class T>
struct SerOutputs {
  Mat<T> codes;     // [2d, (96 / f) B]
  Mat<T> mel_pre;   // [mel_bins, 96 B]
  Mat<T> residual;  // postnet output
  Mat<T> mel_post;  // mel_pre + residual
  Mat<T> logits;    // [4, B]
};

struct SerLosses {
  double l_r1 = 0.0;
  double l_r2 = 0.0;
  double l_e = 0.0;
  double total() const { return l_r1 + l_r2 + l_e; }
};

template <class T>
Mat<T> vstack(const std::vector<const Mat<T>*>& parts) {
  Index rows = 0;
  for (const auto* p : parts) rows += p->rows();
  Mat<T> out(rows, parts.front()->cols());
  Index r = 0;
  for (const auto* p : parts) {
    nn::check_shape(p->cols() == out.cols(), "vstack column count");
    out.middleRows(r, p->rows()) = *p;
    r += p->rows();
  }
  return out;
}

template <class T>
Mat<T> one_hot_phones(const std::vector<std::int32_t>& ids, int n_ids) {
  Mat<T> m = Mat<T>::Zero(n_ids, static_cast<Index>(ids.size()));
  for (std::size_t n = 0; n < ids.size(); ++n) {
    if (ids[n] < 0 || ids[n] >= n_ids)
      throw UsageError("phone id " + std::to_string(ids[n]) + " outside [0, " + std::to_string(n_ids) + ")");
    m(ids[n], static_cast<Index>(n)) = T(1);
  }
  return m;
}

template <class T>
class SerModel {
 public:
  SerModel(const BottleneckConfig& bn, const SerArchitecture& arch, std::uint64_t seed)
      : bn_(bn), arch_(arch), average_(arch.layers) {
    bn_.validate();
    arch_.validate();
    Rng rng(seed, "init");
    const auto relu = nn::Activation::kRelu;
    Index in = arch.feature_dim + arch.speaker_dim;
    for (int i = 0; i < arch.prenet_blocks; ++i) {
      prenet_.emplace_back(in, arch.prenet_filters, arch.kernel, relu, "enc.prenet" + std::to_string(i), rng);
      in = arch.prenet_filters;
    }
    for (int i = 0; i < arch.encoder_blstm_layers; ++i) {
      blstm_.emplace_back(in, bn.d, "enc.blstm" + std::to_string(i), rng);
      in = 2 * bn.d;
    }
    phone_lstm_ = nn::Lstm<T>(arch.n_phone_ids, arch.phone_dim, false, "phone.lstm", rng);
    in = 2 * bn.d + arch.speaker_dim + arch.phone_dim;
    for (int i = 0; i < arch.decoder_blocks; ++i) {
      dec_conv_.emplace_back(in, arch.decoder_filters, arch.kernel, relu, "dec.conv" + std::to_string(i), rng);
      in = arch.decoder_filters;
    }
    for (int i = 0; i < arch.decoder_lstm_layers; ++i) {
      dec_lstm_.emplace_back(in, arch.decoder_lstm_units, false, "dec.lstm" + std::to_string(i), rng);
      in = arch.decoder_lstm_units;
    }
    dec_out_ = nn::Linear<T>(in, arch.mel_bins, "dec.linear", rng);
    in = arch.mel_bins;
    for (int i = 0; i < arch.postnet_blocks; ++i) {
      const bool last = i + 1 == arch.postnet_blocks;
      const Index out = last ? arch.mel_bins : arch.postnet_filters;
      postnet_.emplace_back(in, out, arch.kernel, last ? nn::Activation::kNone : nn::Activation::kTanh,
                            "post.conv" + std::to_string(i), rng);
      in = out;
    }
    cls_hidden_ = nn::Linear<T>(2 * bn.d, arch.classifier_hidden, "cls.hidden", rng);
    cls_out_ = nn::Linear<T>(arch.classifier_hidden, arch.n_classes, "cls.out", rng);
  }

  const BottleneckConfig& bottleneck() const { return bn_; }
  const SerArchitecture& architecture() const { return arch_; }
  LayerAverage<T>& layer_average() { return average_; }
  const LayerAverage<T>& layer_average() const { return average_; }
  nn::Linear<T>& decoder_output() { return dec_out_; }
  nn::ConvNorm<T>& postnet_last() { return postnet_.back(); }

  nn::ParamList<T> parameters() {
    nn::ParamList<T> ps;
    average_.collect(ps);
    for (auto& b : prenet_) b.collect(ps);
    for (auto& b : blstm_) b.collect(ps);
    phone_lstm_.collect(ps);
    for (auto& b : dec_conv_) b.collect(ps);
    for (auto& b : dec_lstm_) b.collect(ps);
    dec_out_.collect(ps);
    for (auto& b : postnet_) b.collect(ps);
    cls_hidden_.collect(ps);
    cls_out_.collect(ps);
    return ps;
  }

  // ---- inference path (no caches, eval-mode batch norm) ----

  Mat<T> encode(const SegmentBatch<T>& b) const {
    check_batch(b);
    const SeqShape s = b.shape();
    Mat<T> havg = average_.apply(b.layers);
    const Mat<T> spk = nn::broadcast_time(b.speaker, s);
    Mat<T> x = vstack<T>({&havg, &spk});
    for (const auto& blk : prenet_) x = blk.apply(x, s);
    for (const auto& l : blstm_) x = l.apply(x, s);
    return nn::downsample_time(x, s, bn_.f);
  }

  Mat<T> phone_encode(const std::vector<std::int32_t>& ids, Index batch) const {
    const SeqShape s{batch, static_cast<Index>(ids.size()) / batch};
    const Mat<T> h = phone_lstm_.apply(one_hot_phones<T>(ids, arch_.n_phone_ids), s);
    return h.rightCols(batch);
  }

  // Returns {mel_pre, residual}; mel_post = mel_pre + residual.
  std::pair<Mat<T>, Mat<T>> decode(const Mat<T>& codes, const Mat<T>& speaker, const Mat<T>& phone) const {
    const Index batch = speaker.cols();
    check_codes(codes, batch);
    const SeqShape s{batch, kSegmentFrames};
    const Mat<T> up = nn::upsample_time(codes, SeqShape{batch, bn_.code_frames()}, bn_.f);
    const Mat<T> spk = nn::broadcast_time(speaker, s);
    const Mat<T> ph = nn::broadcast_time(phone, s);
    Mat<T> x = vstack<T>({&up, &spk, &ph});
    for (const auto& blk : dec_conv_) x = blk.apply(x, s);
    for (const auto& l : dec_lstm_) x = l.apply(x, s);
    Mat<T> mel_pre = dec_out_.apply(x);
    Mat<T> r = mel_pre;
    for (const auto& blk : postnet_) r = blk.apply(r, s);
    return {std::move(mel_pre), std::move(r)};
  }

  Mat<T> classify(const Mat<T>& codes, Index batch) const {
    nn::check_shape(codes.rows() == 2 * bn_.d && codes.cols() % batch == 0, "classifier input");
    const Mat<T> pooled = nn::time_mean(codes, SeqShape{batch, codes.cols() / batch});
    return cls_out_.apply(nn::activate(cls_hidden_.apply(pooled), nn::Activation::kRelu));
  }

  SerOutputs<T> apply(const SegmentBatch<T>& b) const {
    SerOutputs<T> o;
    o.codes = encode(b);
    auto [pre, res] = decode(o.codes, b.speaker, phone_encode(b.phone_ids, b.batch));
    o.mel_pre = std::move(pre);
    o.residual = std::move(res);
    o.mel_post = o.mel_pre + o.residual;
    o.logits = classify(o.codes, b.batch);
    return o;
  }

  // ---- training path ----

  SerOutputs<T> forward(const SegmentBatch<T>& b, bool training = true) {
    check_batch(b);
    const SeqShape s = b.shape();
    batch_ = b.batch;
    SerOutputs<T> o;
    Mat<T> havg = average_.forward(b.layers);
    const Mat<T> spk = nn::broadcast_time(b.speaker, s);
    Mat<T> x = vstack<T>({&havg, &spk});
    for (auto& blk : prenet_) x = blk.forward(x, s, training);
    for (auto& l : blstm_) x = l.forward(x, s);
    o.codes = nn::downsample_time(x, s, bn_.f);

    const SeqShape ps{b.batch, static_cast<Index>(b.phone_ids.size()) / b.batch};
    phone_shape_ = ps;
    const Mat<T> ph_all = phone_lstm_.forward(one_hot_phones<T>(b.phone_ids, arch_.n_phone_ids), ps);
    const Mat<T> phone = ph_all.rightCols(b.batch);

    const Mat<T> up = nn::upsample_time(o.codes, SeqShape{b.batch, bn_.code_frames()}, bn_.f);
    const Mat<T> ph = nn::broadcast_time(phone, s);
    Mat<T> y = vstack<T>({&up, &spk, &ph});
    for (auto& blk : dec_conv_) y = blk.forward(y, s, training);
    for (auto& l : dec_lstm_) y = l.forward(y, s);
    o.mel_pre = dec_out_.forward(y);
    Mat<T> r = o.mel_pre;
    for (auto& blk : postnet_) r = blk.forward(r, s, training);
    o.residual = r;
    o.mel_post = o.mel_pre + o.residual;

    const Mat<T> pooled = nn::time_mean(o.codes, SeqShape{b.batch, bn_.code_frames()});
    cls_h_ = nn::activate(cls_hidden_.forward(pooled), nn::Activation::kRelu);
    o.logits = cls_out_.forward(cls_h_);
    return o;
  }

  // Gradients of the three loss terms with respect to the model outputs.
  void backward(const Mat<T>& d_mel_pre, const Mat<T>& d_mel_post, const Mat<T>& d_logits) {
    const SeqShape s{batch_, kSegmentFrames};
    const SeqShape cs{batch_, bn_.code_frames()};
    // Classifier branch.
    Mat<T> g = cls_out_.backward(d_logits);
    g = nn::activate_backward(g, cls_h_, nn::Activation::kRelu);
    Mat<T> d_codes = nn::time_mean_backward(cls_hidden_.backward(g), cs);

    // Reconstruction branch: mel_post = mel_pre + postnet(mel_pre).
    Mat<T> d_res = d_mel_post;
    for (auto it = postnet_.rbegin(); it != postnet_.rend(); ++it) d_res = it->backward(d_res);
    Mat<T> dy = dec_out_.backward(d_mel_pre + d_mel_post + d_res);
    for (auto it = dec_lstm_.rbegin(); it != dec_lstm_.rend(); ++it) dy = it->backward(dy);
    for (auto it = dec_conv_.rbegin(); it != dec_conv_.rend(); ++it) dy = it->backward(dy);
    const Index w = 2 * bn_.d;
    d_codes += nn::upsample_time_backward<T>(dy.topRows(w), cs, bn_.f);
    const Mat<T> d_phone =
        nn::broadcast_time_backward<T>(dy.bottomRows(arch_.phone_dim), s);
    Mat<T> d_ph_all = Mat<T>::Zero(arch_.phone_dim, phone_shape_.frames());
    d_ph_all.rightCols(batch_) = d_phone;
    phone_lstm_.backward(d_ph_all);

    // Encoder.
    Mat<T> dx = nn::downsample_time_backward(d_codes, s, bn_.f);
    for (auto it = blstm_.rbegin(); it != blstm_.rend(); ++it) dx = it->backward(dx);
    for (auto it = prenet_.rbegin(); it != prenet_.rend(); ++it) dx = it->backward(dx);
    average_.backward(dx.topRows(arch_.feature_dim));
  }

  // L_r1 + L_r2 + L_e and its output gradients.
  SerLosses losses(const SerOutputs<T>& o, const SegmentBatch<T>& b, Mat<T>* d_pre = nullptr,
                   Mat<T>* d_post = nullptr, Mat<T>* d_logits = nullptr) const {
    SerLosses l;
    l.l_r1 = static_cast<double>(nn::mse_loss(o.mel_pre, b.mel_target));
    l.l_r2 = static_cast<double>(nn::mse_loss(o.mel_post, b.mel_target));
    l.l_e = static_cast<double>(nn::cross_entropy_batch(o.logits, b.labels));
    if (d_pre) *d_pre = nn::mse_loss_grad(o.mel_pre, b.mel_target);
    if (d_post) *d_post = nn::mse_loss_grad(o.mel_post, b.mel_target);
    if (d_logits) *d_logits = nn::cross_entropy_batch_grad(o.logits, b.labels);
    return l;
  }

 private:
  void check_batch(const SegmentBatch<T>& b) const {
    const Index n = b.batch * kSegmentFrames;
    nn::check_shape(b.batch >= 1, "empty batch");
    nn::check_shape(static_cast<Index>(b.layers.size()) == arch_.layers, "layer count");
    for (const auto& l : b.layers)
      nn::check_shape(l.rows() == arch_.feature_dim && l.cols() == n, "wav2vec layer [dim, 96 B]");
    nn::check_shape(b.speaker.rows() == arch_.speaker_dim && b.speaker.cols() == b.batch, "speaker embedding");
    nn::check_shape(static_cast<Index>(b.phone_ids.size()) == n, "phone ids");
  }

  void check_codes(const Mat<T>& codes, Index batch) const {
    if (codes.rows() != 2 * bn_.d || codes.cols() != bn_.code_frames() * batch)
      throw UsageError("codes are [" + std::to_string(codes.rows()) + ", " + std::to_string(codes.cols()) +
                       "], bottleneck " + bn_.name + " expects [" + std::to_string(2 * bn_.d) + ", " +
                       std::to_string(bn_.code_frames() * batch) + "]");
  }

  BottleneckConfig bn_;
  SerArchitecture arch_;
  LayerAverage<T> average_;
  std::vector<nn::ConvNorm<T>> prenet_;
  std::vector<nn::Blstm<T>> blstm_;
  nn::Lstm<T> phone_lstm_;
  std::vector<nn::ConvNorm<T>> dec_conv_;
  std::vector<nn::Lstm<T>> dec_lstm_;
  nn::Linear<T> dec_out_;
  std::vector<nn::ConvNorm<T>> postnet_;
  nn::Linear<T> cls_hidden_, cls_out_;

  Index batch_ = 1;
  SeqShape phone_shape_;
  Mat<T> cls_h_;
};

}  // namespace emorec::ser
