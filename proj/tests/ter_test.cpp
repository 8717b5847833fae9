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
#include <memory>

#include "emorec/data/synthetic.hpp"
#include "emorec/ter/trainer.hpp"
#include "grad_check.hpp"

namespace {

using namespace emorec;
using namespace emorec::ter;
namespace et = emorec::testing;

TerArchitecture tiny() {
  TerArchitecture a;
  a.n_conv_blocks = 2;
  a.filters = 6;
  a.kernel = 3;
  a.hidden = 5;
  a.token_dim = 7;
  return a;
}

TextFeatureSet random_text(std::int64_t n, std::int64_t dim, Rng& rng) {
  TextFeatureSet t;
  t.n_tokens = n;
  t.dim = dim;
  t.tokens.resize(static_cast<std::size_t>(n * dim));
  for (auto& v : t.tokens) v = static_cast<float>(rng.normal());
  return t;
}

TEST(TerModel, GradientsMatchFiniteDifferences) {
  Rng rng(1, "ter-grad");
  TerModel<double> model(tiny(), 3);
  const auto a = random_text(4, 7, rng), b = random_text(2, 7, rng), c = random_text(6, 7, rng);
  const auto batch = build_token_batch<double>({&a, &b, &c}, {0, 2, 3}, 6, 7);
  auto loss = [&] { return nn::cross_entropy_batch(model.forward(batch, true), batch.labels); };
  for (auto* p : model.parameters()) p->zero_grad();
  const Mat<double> logits = model.forward(batch, true);
  model.backward(nn::cross_entropy_batch_grad(logits, batch.labels));
  for (auto* p : model.parameters()) {
    if (!p->trainable) continue;
    EXPECT_LT(et::rel_error(p->grad, et::numeric_grad(p->value, loss)), 1e-3) << p->name;
  }
}

TEST(TerModel, LogitsIgnorePaddingRows) {
  Rng rng(2, "ter-pad");
  TerModel<double> model(tiny(), 4);
  const auto a = random_text(3, 7, rng), b = random_text(5, 7, rng);
  const auto short_pad = build_token_batch<double>({&a, &b}, {0, 1}, 5, 7);
  const auto long_pad = build_token_batch<double>({&a, &b}, {0, 1}, 11, 7);
  EXPECT_TRUE(model.apply(short_pad).isApprox(model.apply(long_pad), 1e-12));
  EXPECT_TRUE(model.forward(short_pad, true).isApprox(model.forward(long_pad, true), 1e-12));
  const auto alone = build_token_batch<double>({&a}, {0}, 8, 7);
  EXPECT_TRUE(model.apply(alone).col(0).isApprox(model.apply(short_pad).col(0), 1e-12));
}

TEST(TerModel, SingleTokenAndEmptyTranscriptAreFinite) {
  Rng rng(3, "ter-one");
  TerModel<float> model(tiny(), 5);
  const auto one = random_text(1, 7, rng);
  TextFeatureSet empty;
  empty.n_tokens = 1;
  empty.dim = 7;
  empty.tokens.assign(7, 0.0f);
  empty.empty_transcript = true;
  const auto b = build_token_batch<float>({&one, &empty}, {0, 0}, 9, 7);
  EXPECT_TRUE(model.apply(b).allFinite());
}

TEST(TerModel, ReproducibleFromSeed) {
  Rng rng(4, "ter-seed");
  const auto t = random_text(4, 7, rng);
  const auto b = build_token_batch<float>({&t}, {1}, 6, 7);
  TerModel<float> x(tiny(), 9), y(tiny(), 9), z(tiny(), 10);
  EXPECT_EQ(x.apply(b), y.apply(b));
  EXPECT_NE(x.apply(b), z.apply(b));
}

TEST(TerModel, TruncationWarnsAndKeepsPrefix) {
  Rng rng(5, "ter-trunc");
  const auto t = random_text(6, 7, rng);
  std::vector<std::string> warnings;
  const auto b = build_token_batch<float>({&t}, {0}, 4, 7, {"utt9"}, [&](const std::string& w) { warnings.push_back(w); });
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("utt9"), std::string::npos);
  EXPECT_EQ(b.lengths[0], 4);
  for (Index k = 0; k < 4; ++k)
    for (Index c = 0; c < 7; ++c) EXPECT_EQ(b.x(c, k), t.tokens[static_cast<std::size_t>(k * 7 + c)]);
  EXPECT_THROW(build_token_batch<float>({&t}, {0}, 4, 8), DataError);
}

TEST(TerInfer, ProbabilitiesMatchSoftmaxOracle) {
  Rng rng(6, "ter-softmax");
  TerModel<float> model(tiny(), 6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_text(1 + trial % 5, 7, rng);
    const EmotionProbs p = ter_infer(model, t, 5);
    const Mat<float> z = model.apply(build_token_batch<float>({&t}, {0}, 5, 7));
    double m = -1e300, s = 0.0;
    for (int k = 0; k < 4; ++k) m = std::max(m, double(z(k, 0)));
    for (int k = 0; k < 4; ++k) s += std::exp(double(z(k, 0)) - m);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(p.p[static_cast<std::size_t>(k)], std::exp(double(z(k, 0)) - m) / s, 1e-6);
    EXPECT_NEAR(p.sum(), 1.0, 1e-6);
  }
}

TEST(TerInfer, ArgmaxStableUnderLogitShift) {
  Rng rng(7, "ter-shift");
  for (int trial = 0; trial < 100; ++trial) {
    Mat<double> z(4, 1);
    for (int k = 0; k < 4; ++k) z(k, 0) = rng.normal(0.0, 3.0);
    const Mat<double> shifted = z.array() + rng.normal(0.0, 50.0);
    EXPECT_EQ(probs_from_logits(z).argmax(), probs_from_logits(shifted).argmax());
  }
}

TEST(TerConfig, FullScaleDefaults) {
  const TerConfig c;
  EXPECT_EQ(c.train.batch, 4);
  EXPECT_EQ(c.train.iterations, 412800);
  EXPECT_DOUBLE_EQ(c.train.lr, 1e-4);
  const auto back = ter_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(ter_config_from_json({{"arch", {{"kernel", 4}}}}), UsageError);
}

struct Corpus {
  std::shared_ptr<SyntheticCorpus> corpus;
  std::unique_ptr<SyntheticFeatureSource> src;
  std::vector<std::string> ids;
  std::vector<int> labels;
};

Corpus make_corpus(int speakers, int per_speaker, int text_dim, bool collapse = false) {
  SyntheticCorpusConfig c;
  c.n_speakers = speakers;
  c.n_utterances_per_speaker = per_speaker;
  c.feature_dim = 4;
  c.text_dim = text_dim;
  Corpus k;
  k.corpus = std::make_shared<SyntheticCorpus>(c);
  k.src = std::make_unique<SyntheticFeatureSource>(k.corpus);
  for (const auto& r : k.corpus->manifest()) {
    k.ids.push_back(r.utterance_id);
    k.labels.push_back(collapse ? 2 : emotion_index(r.emotion));
  }
  return k;
}

TerConfig small_config(int text_dim) {
  TerConfig cfg;
  cfg.arch = tiny();
  cfg.arch.filters = 16;
  cfg.arch.hidden = 16;
  cfg.arch.token_dim = text_dim;
  cfg.train.lr = 1e-3;
  cfg.train.checkpoint_every = 0;
  return cfg;
}

TEST(TerTrainer, MaxTokensFittedOnTrainingIdsOnly) {
  auto k = make_corpus(2, 6, 8);
  std::vector<std::string> train(k.ids.begin(), k.ids.begin() + 4);
  std::vector<int> labels(k.labels.begin(), k.labels.begin() + 4);
  std::int64_t expect = 0;
  for (const auto& id : train) expect = std::max(expect, k.src->text(id)->n_tokens);
  TerTrainer t(small_config(8), *k.src, train, labels);
  EXPECT_EQ(t.config().max_tokens, expect);
}

TEST(TerTrainer, ClassCollapsedCorpusDrivesLossToZero) {
  auto k = make_corpus(2, 8, 8, true);
  TerTrainer t(small_config(8), *k.src, k.ids, k.labels);
  double last = 0.0;
  for (int i = 0; i < 300; ++i) last = t.step();
  EXPECT_LT(last, 1e-3);
}

TEST(TerTrainer, LogReproducesAndResumeMatches) {
  auto k = make_corpus(2, 8, 8);
  auto run = [&](std::int64_t iters) {
    std::vector<std::string> log;
    TerTrainer t(small_config(8), *k.src, k.ids, k.labels);
    t.run(iters, [&](const nlohmann::json& j) { log.push_back(j.dump()); });
    return std::make_pair(log, t.checkpoint());
  };
  const auto [log_a, ck_a] = run(40);
  const auto [log_b, ck_b] = run(40);
  EXPECT_EQ(log_a, log_b);

  const auto [log_half, ck_half] = run(15);
  auto resumed = TerTrainer::resume(decode_record(encode_record(ck_half)), *k.src);
  std::vector<std::string> log_rest;
  resumed.run(40, [&](const nlohmann::json& j) { log_rest.push_back(j.dump()); });
  std::vector<std::string> joined = log_half;
  joined.insert(joined.end(), log_rest.begin(), log_rest.end());
  EXPECT_EQ(joined, log_a);
  EXPECT_EQ(encode_record(resumed.checkpoint()), encode_record(ck_a));
}

TEST(TerTrainer, CheckpointLoadsForInference) {
  auto k = make_corpus(2, 4, 8);
  TerTrainer t(small_config(8), *k.src, k.ids, k.labels);
  for (int i = 0; i < 5; ++i) t.step();
  const auto loaded = load_ter_checkpoint(t.checkpoint());
  const auto text = k.src->text(k.ids[0]);
  const auto a = ter_infer(t.model(), *text, t.config().max_tokens);
  const auto b = ter_infer(*loaded.model, *text, loaded.config.max_tokens);
  EXPECT_EQ(a.p, b.p);
  EXPECT_EQ(loaded.iteration, 5);
}

}  // namespace
