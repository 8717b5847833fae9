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

#include <limits>
#include <map>
#include <set>

#include "emorec/data/folds.hpp"
#include "emorec/data/manifest.hpp"
#include "emorec/data/synthetic.hpp"
#include "temp_dir.hpp"

namespace {

using namespace emorec;
namespace et = emorec::testing;

RawAnnotation raw(std::string id, std::vector<std::string> labels, int session = 1, std::string spk = "S1") {
  RawAnnotation a;
  a.utterance_id = std::move(id);
  a.session = session;
  a.speaker_id = std::move(spk);
  a.transcript = "hello";
  a.duration_s = 1.5;
  a.labels = std::move(labels);
  return a;
}

TEST(Manifest, EmptyInputGivesEmptyManifest) { EXPECT_TRUE(build_manifest({}).empty()); }

TEST(Manifest, AgreementAndMerge) {
  const auto m = build_manifest({raw("c", {"Sad", "Sad", "Sad"}), raw("a", {"Exc", "Exc", "Neu"}),
                                 raw("b", {"Ang", "Neu", "Sad"})});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].utterance_id, "a");
  EXPECT_EQ(m[0].emotion, Emotion::kHappy);
  EXPECT_EQ(m[1].utterance_id, "c");
  EXPECT_EQ(m[1].emotion, Emotion::kSad);
}

// Hand oracle against every triple over a label alphabet with targets,
// Excited and two non-targets.
TEST(Manifest, AllLabelTriplesMatchOracle) {
  const std::vector<std::string> alphabet = {"Neutral", "Happiness", "Sadness", "Anger", "Excited", "Frustration",
                                             "Surprise"};
  auto mapped = [](const std::string& s, bool merge) -> std::string {
    if (merge && s == "Excited") return "Happiness";
    return s;
  };
  auto target = [](const std::string& s) -> std::optional<Emotion> {
    if (s == "Neutral") return Emotion::kNeutral;
    if (s == "Happiness" || s == "Excited") return Emotion::kHappy;
    if (s == "Sadness") return Emotion::kSad;
    if (s == "Anger") return Emotion::kAngry;
    return std::nullopt;
  };
  for (bool merge_first : {false, true}) {
    std::vector<RawAnnotation> all;
    std::map<std::string, std::optional<Emotion>> expect;
    int n = 0;
    for (const auto& x : alphabet)
      for (const auto& y : alphabet)
        for (const auto& z : alphabet) {
          const std::string id = "u" + std::to_string(n++);
          all.push_back(raw(id, {x, y, z}));
          std::map<std::string, int> votes;
          for (const auto& l : {x, y, z}) ++votes[mapped(l, merge_first)];
          std::optional<Emotion> e;
          for (const auto& [l, c] : votes)
            if (c >= 2) e = target(l);
          expect[id] = e;
        }
    LabelPolicy p;
    p.merge_before_agreement = merge_first;
    const auto m = build_manifest(all, p);
    std::map<std::string, Emotion> got;
    for (const auto& r : m) got[r.utterance_id] = r.emotion;
    for (const auto& [id, e] : expect) {
      if (e) {
        ASSERT_TRUE(got.count(id)) << id;
        EXPECT_EQ(got[id], *e) << id;
      } else {
        EXPECT_FALSE(got.count(id)) << id;
      }
    }
  }
}

TEST(Manifest, PolicyOrderMatters) {
  const std::vector<RawAnnotation> a = {raw("x", {"Happiness", "Excited", "Sadness"})};
  EXPECT_TRUE(build_manifest(a).empty());
  LabelPolicy p;
  p.merge_before_agreement = true;
  const auto m = build_manifest(a, p);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].emotion, Emotion::kHappy);
}

TEST(Manifest, RejectsMalformedRows) {
  auto bad = raw("r1", {"Sad", "Bogus", "Sad"});
  bad.row = "line 7";
  try {
    build_manifest({bad});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
  }
  EXPECT_THROW(build_manifest({raw("r2", {})}), DataError);
  EXPECT_THROW(build_manifest({raw("r3", {"Sad"}, 9)}), DataError);
  EXPECT_THROW(build_manifest({raw("a", {"Sad"}, 1, "S"), raw("b", {"Sad"}, 2, "S")}), DataError);
}

TEST(Manifest, IdempotentOnUnanimousReexpression) {
  std::vector<RawAnnotation> in;
  for (int i = 0; i < 20; ++i) in.push_back(raw("u" + std::to_string(i), {"Anger", i % 2 ? "Excited" : "Neutral",
                                                                         i % 3 ? "Excited" : "Anger"}));
  const auto m = build_manifest(in);
  std::vector<RawAnnotation> again;
  for (const auto& r : m) {
    auto a = raw(r.utterance_id, {}, r.session, r.speaker_id);
    const std::string l(emotion_name(r.emotion));
    a.labels = {l, l, l};
    a.transcript = r.transcript;
    a.duration_s = r.duration_s;
    again.push_back(a);
  }
  EXPECT_EQ(build_manifest(again), m);
}

TEST(Manifest, FileRoundTrip) {
  et::TempDir dir;
  Manifest m = build_manifest({raw("a", {"Sad", "Sad"}), raw("b", {"Anger", "Anger"})});
  m[0].transcript = "pipes | and\ttabs \\ too";
  write_manifest(dir.path() / "m.tsv", m);
  EXPECT_EQ(read_manifest(dir.path() / "m.tsv"), m);
}

Manifest one_per_session() {
  Manifest m;
  for (int s = 1; s <= 5; ++s) {
    UtteranceRecord r;
    r.utterance_id = "u" + std::to_string(s);
    r.session = s;
    r.speaker_id = "spk" + std::to_string(s);
    m.push_back(r);
  }
  return m;
}

TEST(Folds, OnePerSessionGivesOneTestFourTrain) {
  const auto folds = make_session_folds(one_per_session());
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.test_ids.size(), 1u);
    EXPECT_EQ(f.train_ids.size(), 4u);
    EXPECT_EQ(f.test_ids[0], "u" + std::to_string(f.fold_id));
  }
}

TEST(Folds, MissingSessionIsNamed) {
  auto m = one_per_session();
  m.erase(m.begin() + 2);
  try {
    make_session_folds(m);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("session 3"), std::string::npos);
  }
}

TEST(Folds, TenSpeakerSyntheticSessionFoldsSeparateSpeakers) {
  SyntheticCorpusConfig c;
  c.n_speakers = 10;
  c.n_utterances_per_speaker = 6;
  c.feature_dim = 4;
  c.text_dim = 4;
  const SyntheticCorpus corpus(c);
  const auto& m = corpus.manifest();
  std::map<std::string, std::string> spk;
  std::map<std::string, int> session;
  for (const auto& r : m) {
    spk[r.utterance_id] = r.speaker_id;
    session[r.utterance_id] = r.session;
  }
  const auto folds = make_session_folds(m);
  std::set<std::string> union_test;
  for (const auto& f : folds) {
    std::set<std::string> tr, te;
    for (const auto& id : f.train_ids) tr.insert(spk[id]);
    for (const auto& id : f.test_ids) {
      te.insert(spk[id]);
      EXPECT_EQ(session[id], f.fold_id);
      EXPECT_TRUE(union_test.insert(id).second);
    }
    for (const auto& s : te) EXPECT_FALSE(tr.count(s)) << s;
    EXPECT_EQ(te.size(), 2u);
    EXPECT_NO_THROW(validate_fold(f));
  }
  EXPECT_EQ(union_test.size(), m.size());
}

TEST(Folds, ProbeFoldsShareSpeakersAndSplitEightyTwenty) {
  SyntheticCorpusConfig c;
  c.n_speakers = 10;
  c.n_utterances_per_speaker = 5;
  c.feature_dim = 4;
  c.text_dim = 4;
  const SyntheticCorpus corpus(c);
  std::map<std::string, std::string> spk;
  std::map<std::string, int> session;
  for (const auto& r : corpus.manifest()) {
    spk[r.utterance_id] = r.speaker_id;
    session[r.utterance_id] = r.session;
  }
  const auto folds = make_probe_folds(corpus.manifest(), 3);
  EXPECT_EQ(folds, make_probe_folds(corpus.manifest(), 3));
  for (const auto& f : folds) {
    std::map<std::string, int> ntr, nte;
    for (const auto& id : f.train_ids) {
      ++ntr[spk[id]];
      EXPECT_NE(session[id], f.fold_id);
    }
    for (const auto& id : f.test_ids) ++nte[spk[id]];
    EXPECT_EQ(ntr.size(), 8u);
    EXPECT_EQ(nte.size(), 8u);
    for (const auto& [s, n] : ntr) {
      EXPECT_EQ(n, 4);
      EXPECT_EQ(nte[s], 1);
    }
    EXPECT_NO_THROW(validate_fold(f));
  }
}

TEST(Folds, FileRoundTripAndOverlapRejected) {
  et::TempDir dir;
  const auto folds = make_session_folds(one_per_session());
  write_folds(dir.path() / "folds.jsonl", folds);
  EXPECT_EQ(read_folds(dir.path() / "folds.jsonl"), folds);
  FoldSpec bad{1, {"a", "b"}, {"b"}};
  EXPECT_THROW(validate_fold(bad), DataError);
}

SyntheticCorpusConfig spec_config() {
  SyntheticCorpusConfig c;
  c.n_speakers = 4;
  c.n_utterances_per_speaker = 16;
  c.frames_per_utterance = 192;
  c.factor_snr = 10.0;
  c.seed = 7;
  return c;
}

TEST(Synthetic, ShapesByConstruction) {
  const SyntheticCorpus corpus(spec_config());
  ASSERT_EQ(corpus.size(), 64u);
  const auto f = corpus.speech(0);
  EXPECT_EQ(f.layers, 25);
  EXPECT_EQ(f.frames, 192);
  EXPECT_EQ(f.dim, 1024);
  EXPECT_NO_THROW(f.validate());
  const auto t = corpus.text(0);
  EXPECT_EQ(t.dim, 1024);
  EXPECT_GE(t.n_tokens, 1);
}

TEST(Synthetic, BitIdenticalFromConfig) {
  auto c = spec_config();
  c.feature_dim = 16;
  const SyntheticCorpus a(c), b(c);
  EXPECT_EQ(a.manifest(), b.manifest());
  for (std::size_t i : {0u, 17u, 63u}) {
    EXPECT_EQ(a.speech(i).stack, b.speech(i).stack);
    EXPECT_EQ(a.speech(i).mel, b.speech(i).mel);
    EXPECT_EQ(a.text(i).tokens, b.text(i).tokens);
  }
  c.seed = 8;
  const SyntheticCorpus d(c);
  EXPECT_NE(a.speech(0).stack, d.speech(0).stack);
}

TEST(Synthetic, EmotionsBalancedPerSpeaker) {
  auto c = spec_config();
  c.feature_dim = 4;
  c.n_utterances_per_speaker = 14;
  const SyntheticCorpus corpus(c);
  std::map<std::string, std::array<int, 4>> counts;
  for (const auto& r : corpus.manifest()) ++counts[r.speaker_id][static_cast<std::size_t>(emotion_index(r.emotion))];
  for (const auto& [s, k] : counts) {
    const auto [lo, hi] = std::minmax_element(k.begin(), k.end());
    EXPECT_LE(*hi - *lo, 1) << s;
  }
}

TEST(Synthetic, NoiselessFramesDependOnlyOnFactors) {
  auto c = spec_config();
  c.feature_dim = 8;
  c.factor_snr = std::numeric_limits<double>::infinity();
  const SyntheticCorpus corpus(c);
  std::map<std::tuple<int, int, int>, std::vector<float>> seen;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& fac = corpus.factors(i);
    const auto f = corpus.speech(i);
    for (std::int64_t t = 0; t < f.frames; t += 7) {
      const auto key = std::make_tuple(fac.speaker, emotion_index(fac.emotion), fac.phones[static_cast<std::size_t>(t)]);
      std::vector<float> frame;
      for (std::int64_t l = 0; l < f.layers; ++l)
        for (std::int64_t d = 0; d < f.dim; ++d) frame.push_back(f.layer(l)(d, t));
      for (std::int64_t b = 0; b < f.mel_bins; ++b) frame.push_back(f.mel_frames()(b, t));
      auto [it, fresh] = seen.emplace(key, frame);
      if (!fresh) {
        EXPECT_EQ(it->second, frame);
      }
    }
  }
}

TEST(Synthetic, RejectsTooShortUtterances) {
  auto c = spec_config();
  c.frames_per_utterance = 95;
  EXPECT_THROW(SyntheticCorpus{c}, UsageError);
  c = spec_config();
  c.n_speakers = 1;
  EXPECT_THROW(SyntheticCorpus{c}, UsageError);
}

}  // namespace
