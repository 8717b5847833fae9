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

// Text emotion model: ConvNorm blocks along the token axis, a max-pool over
// the valid tokens, then two affine layers. Padded token positions are
// masked out of the batch statistics and zeroed after every block, so the
// logits only depend on the first min(N, N') token rows.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "emorec/data/probs.hpp"
#include "emorec/nn/layers.hpp"
#include "emorec/nn/loss.hpp"
#include "emorec/nn/ops.hpp"
#include "emorec/ter/config.hpp"

namespace emorec::ter {

using nn::Index;
using nn::Mat;
using nn::SeqShape;
using nn::Vec;

using WarnSink = std::function<void(const std::string&)>;

// Padded token matrices for a batch, time-major (column t * B + b).
template <class T>
struct TokenBatch {
  Index batch = 0;
  Index max_tokens = 0;
  Mat<T> x;                   // [token_dim, N' B]
  Vec<T> mask;                // [N' B], 1 on valid tokens
  std::vector<Index> lengths;  // valid tokens per item, >= 1
  std::vector<int> labels;

  SeqShape shape() const { return {batch, max_tokens}; }
};

// Pads (or truncates, with a warning) every item to N' rows. An utterance
// with no tokens keeps one all-zero row.
template <class T>
TokenBatch<T> build_token_batch(const std::vector<const TextFeatureSet*>& items, const std::vector<int>& labels,
                                std::int64_t max_tokens, std::int64_t token_dim,
                                const std::vector<std::string>& ids = {}, const WarnSink& warn = {}) {
  if (items.empty() || labels.size() != items.size()) throw UsageError("token batch needs labeled items");
  if (max_tokens < 1) throw UsageError("max token count must be >= 1");
  TokenBatch<T> b;
  b.batch = static_cast<Index>(items.size());
  b.max_tokens = max_tokens;
  b.labels = labels;
  b.x = Mat<T>::Zero(token_dim, max_tokens * b.batch);
  b.mask = Vec<T>::Zero(max_tokens * b.batch);
  for (Index j = 0; j < b.batch; ++j) {
    const TextFeatureSet& t = *items[static_cast<std::size_t>(j)];
    if (t.dim != token_dim)
      throw DataError("token embeddings have width " + std::to_string(t.dim) + ", expected " +
                      std::to_string(token_dim));
    const PaddedTokens p = pad_tokens(t, max_tokens);
    if (p.truncated && warn) {
      const std::string who = j < static_cast<Index>(ids.size()) ? ids[static_cast<std::size_t>(j)] : "utterance";
      warn(who + " has " + std::to_string(t.n_tokens) + " tokens; truncated to " + std::to_string(max_tokens));
    }
    const Index len = std::max<Index>(1, p.valid);
    for (Index k = 0; k < len; ++k) {
      const Index col = k * b.batch + j;
      for (Index c = 0; c < token_dim; ++c)
        b.x(c, col) = static_cast<T>(p.data[static_cast<std::size_t>(k * token_dim + c)]);
      b.mask(col) = T(1);
    }
    b.lengths.push_back(len);
  }
  return b;
}

template <class T>
class TerModel {
 public:
  TerModel(const TerArchitecture& arch, std::uint64_t seed) : arch_(arch) {
    arch_.validate();
    Rng rng(seed, "init");
    Index in = arch.token_dim;
    for (int i = 0; i < arch.n_conv_blocks; ++i) {
      convs_.emplace_back(in, arch.filters, arch.kernel, nn::Activation::kRelu, "ter.conv" + std::to_string(i), rng);
      in = arch.filters;
    }
    hidden_ = nn::Linear<T>(in, arch.hidden, "ter.hidden", rng);
    out_ = nn::Linear<T>(arch.hidden, arch.n_classes, "ter.out", rng);
  }

  const TerArchitecture& architecture() const { return arch_; }

  nn::ParamList<T> parameters() {
    nn::ParamList<T> p;
    for (auto& c : convs_) c.collect(p);
    hidden_.collect(p);
    out_.collect(p);
    return p;
  }

  Mat<T> forward(const TokenBatch<T>& b, bool training) {
    check_input(b);
    Mat<T> h = b.x;
    for (auto& c : convs_) h = c.forward(h, b.shape(), training, &b.mask);
    h = pool_.forward(h, b.shape(), b.lengths);
    hidden_out_ = hidden_.forward(h).cwiseMax(T(0));
    return out_.forward(hidden_out_);
  }

  // Eval-mode logits without touching the training caches.
  Mat<T> apply(const TokenBatch<T>& b) const {
    check_input(b);
    Mat<T> h = b.x;
    for (const auto& c : convs_) h = c.apply(h, b.shape(), &b.mask);
    h = pool_apply(h, b.shape(), b.lengths);
    return out_.apply(hidden_.apply(h).cwiseMax(T(0)));
  }

  void backward(const Mat<T>& d_logits) {
    Mat<T> g = out_.backward(d_logits);
    g = (hidden_out_.array() > T(0)).select(g, T(0));
    g = pool_.backward(hidden_.backward(g));
    for (auto it = convs_.rbegin(); it != convs_.rend(); ++it) g = it->backward(g);
  }

 private:
  void check_input(const TokenBatch<T>& b) const {
    if (b.x.rows() != arch_.token_dim)
      throw UsageError("TER input width " + std::to_string(b.x.rows()) + " != " + std::to_string(arch_.token_dim));
  }

  static Mat<T> pool_apply(const Mat<T>& h, SeqShape s, const std::vector<Index>& lengths) {
    Mat<T> y(h.rows(), s.batch);
    for (Index j = 0; j < s.batch; ++j) {
      y.col(j) = h.col(j);
      for (Index t = 1; t < lengths[static_cast<std::size_t>(j)]; ++t) y.col(j) = y.col(j).cwiseMax(h.col(t * s.batch + j));
    }
    return y;
  }

  TerArchitecture arch_;
  std::vector<nn::ConvNorm<T>> convs_;
  nn::TimeMaxPool<T> pool_;
  nn::Linear<T> hidden_, out_;
  Mat<T> hidden_out_;
};

template <class T>
EmotionProbs probs_from_logits(const Mat<T>& logits, Index col = 0) {
  const Mat<T> p = nn::softmax(Mat<T>(logits.col(col)));
  EmotionProbs e;
  for (int k = 0; k < kNumEmotions; ++k) e.p[static_cast<std::size_t>(k)] = static_cast<double>(p(k, 0));
  return e;
}

// Utterance-level probabilities for one transcript.
template <class T>
EmotionProbs ter_infer(const TerModel<T>& model, const TextFeatureSet& t, std::int64_t max_tokens,
                       const std::string& id = {}, const WarnSink& warn = {}) {
  const auto b = build_token_batch<T>({&t}, {0}, max_tokens, model.architecture().token_dim,
                                      id.empty() ? std::vector<std::string>{} : std::vector<std::string>{id}, warn);
  return probs_from_logits(model.apply(b));
}

}  // namespace emorec::ter
