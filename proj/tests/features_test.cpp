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
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "emorec/features/cache.hpp"
#include "emorec/features/extract.hpp"
#include "temp_dir.hpp"

namespace {

using namespace emorec;
namespace et = emorec::testing;

std::vector<float> tone(std::size_t n, double hz, double amp, std::uint64_t seed = 0) {
  Rng rng(seed, "tone");
  std::vector<float> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / 16000.0) + 0.01 * rng.normal());
  return w;
}

TEST(Wav2vec, TwoSecondsGiveAboutOneHundredFrames) {
  const StubWav2vecClient client(3);
  const auto wave = tone(32000, 220.0, 0.3);
  const LayerStack s = extract_wav2vec_stack(wave, client);
  EXPECT_EQ(s.layers, 25);
  EXPECT_EQ(s.dim, 1024);
  EXPECT_EQ(s.frames, 99);
  const LayerStack again = extract_wav2vec_stack(wave, client);
  EXPECT_EQ(s.data, again.data);
}

TEST(Wav2vec, IdentityStubFollowsItsContract) {
  const StubWav2vecClient client(0, true, 16);
  const auto wave = tone(1000, 440.0, 0.5);
  const LayerStack s = extract_wav2vec_stack(wave, client);
  ASSERT_EQ(s.frames, 2);
  for (std::int64_t l = 0; l < s.layers; ++l)
    for (std::int64_t t = 0; t < s.frames; ++t)
      for (std::int64_t c = 0; c < s.dim; ++c) {
        const float expect = (1.0f + static_cast<float>(l) / 24.0f) * wave[static_cast<std::size_t>(t * 320 + c)];
        EXPECT_EQ(s.data[static_cast<std::size_t>((l * s.frames + t) * s.dim + c)], expect);
      }
}

TEST(Wav2vec, ShortWaveformRejected) {
  const StubWav2vecClient client(0, true, 8);
  const std::vector<float> wave(399, 0.1f);
  EXPECT_THROW(extract_wav2vec_stack(wave, client), DataError);
}

class FailingWav2vec final : public Wav2vecClient {
 public:
  std::string fingerprint() const override { return "failing"; }
  LayerStack infer(std::span<const float>) const override { throw ModelClientError("endpoint unreachable"); }
};

TEST(Wav2vec, ClientFailureIsAnError) {
  const auto wave = tone(4000, 100.0, 0.2);
  EXPECT_THROW(extract_wav2vec_stack(wave, FailingWav2vec{}), ModelClientError);
}

TEST(Mel, FrameCountMatchesSegment) {
  const auto mel = compute_log_mel(tone(30720, 300.0, 0.2));
  EXPECT_EQ(mel.size(), 96u * 80u);
}

TEST(Mel, SilenceNormalizesToConstantMinimum) {
  const std::vector<float> silence(16000, 0.0f);
  const auto mel = compute_log_mel(silence);
  MelNormalizer n;
  n.fit({&mel});
  for (float v : n.apply(mel)) EXPECT_EQ(v, 0.0f);
}

TEST(Mel, EmptyWaveformRejected) {
  EXPECT_THROW(compute_log_mel(std::vector<float>{}), DataError);
}

TEST(Mel, DoublingAmplitudeAddsLogTwo) {
  const auto w = tone(8000, 500.0, 0.2, 1);
  std::vector<float> w2(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) w2[i] = 2.0f * w[i];
  const auto a = compute_log_mel(w);
  const auto b = compute_log_mel(w2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > std::log(1e-3)) {
      EXPECT_NEAR(b[i] - a[i], std::log(2.0), 1e-4) << i;
    }
  }
}

// Direct O(n^2) DFT for one frame against the FFT path.
TEST(Mel, MatchesDirectStftOracle) {
  const MelOptions o;
  const auto w = tone(1600, 700.0, 0.3, 2);
  const auto mel = compute_log_mel(w, o);
  const auto fb = mel_filterbank(o);
  const auto win = hann_window(o.window);
  const std::int64_t t = 2;
  std::vector<double> mag(static_cast<std::size_t>(o.n_fft / 2 + 1));
  for (int k = 0; k <= o.n_fft / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < o.window; ++i) {
      const auto idx = static_cast<std::size_t>(t * o.hop + i);
      const double x = idx < w.size() ? w[idx] * win[static_cast<std::size_t>(i)] : 0.0;
      acc += x * std::polar(1.0, -2.0 * std::numbers::pi * k * i / o.n_fft);
    }
    mag[static_cast<std::size_t>(k)] = std::abs(acc);
  }
  for (int m = 0; m < o.n_mels; ++m) {
    double e = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) e += fb[static_cast<std::size_t>(m)][k] * mag[k];
    EXPECT_NEAR(mel[static_cast<std::size_t>(t * o.n_mels + m)], std::log(std::max(e, o.magnitude_floor)), 1e-4);
  }
}

TEST(Phones, WholeUtterancePhoneIsConstant) {
  const auto ids = phone_sequence({{"AH1", 0.0, 1.0}}, 50);
  const auto ah = PhoneInventory::instance().id_of("AH");
  for (auto id : ids) EXPECT_EQ(id, ah);
}

TEST(Phones, EmptyAlignmentIsSilence) {
  for (auto id : phone_sequence({}, 7)) EXPECT_EQ(id, PhoneInventory::kSilence);
}

TEST(Phones, OverlapTieGoesToEarlierPhone) {
  const auto& inv = PhoneInventory::instance();
  const auto ids = phone_sequence({{"AA", 0.0, 0.03}, {"B", 0.03, 0.06}}, 3);
  EXPECT_EQ(ids[0], inv.id_of("AA"));
  EXPECT_EQ(ids[1], inv.id_of("AA"));
  EXPECT_EQ(ids[2], inv.id_of("B"));
}

// Exhaustive per-frame overlap oracle on random alignments with gaps.
TEST(Phones, MatchesOverlapOracle) {
  const auto& inv = PhoneInventory::instance();
  const std::vector<std::string> labels = {"AA", "IY", "K", "sil", "XX", "[LAUGHTER]"};
  Rng rng(5, "phones");
  for (int trial = 0; trial < 30; ++trial) {
    PhoneAlignment a;
    double t = 0.0;
    while (t < 0.5) {
      t += 0.001 * static_cast<double>(rng.uniform_int(0, 15));
      const double d = 0.001 * static_cast<double>(rng.uniform_int(1, 60));
      a.push_back({labels[static_cast<std::size_t>(rng.uniform_int(0, 5))], t, t + d});
      t += d;
    }
    const auto ids = phone_sequence(a, 25);
    for (int f = 0; f < 25; ++f) {
      const std::int64_t f0 = f * 20000, f1 = f0 + 20000;
      std::int64_t best = 0;
      std::int32_t expect = PhoneInventory::kSilence;
      for (const auto& p : a) {
        const auto s = std::llround(p.start_s * 1e6), e = std::llround(p.end_s * 1e6);
        const std::int64_t ov = std::min<std::int64_t>(f1, e) - std::max<std::int64_t>(f0, s);
        if (ov > best) {
          best = ov;
          expect = inv.id_of(p.label);
        }
      }
      EXPECT_EQ(ids[static_cast<std::size_t>(f)], expect) << "trial " << trial << " frame " << f;
    }
  }
}

TEST(Phones, InventoryHas128IdsAndMapsUnknowns) {
  const auto& inv = PhoneInventory::instance();
  EXPECT_EQ(inv.size(), 128);
  EXPECT_EQ(inv.id_of("ah_B"), inv.id_of("AH0"));
  EXPECT_EQ(inv.id_of("sp"), PhoneInventory::kSilence);
  EXPECT_EQ(inv.id_of("zz"), PhoneInventory::kNotIdentified);
  EXPECT_GT(inv.id_of("[LAUGHTER]"), 40);
}

TEST(SpeakerEmbedding, SingleUtteranceIsItsRenormalizedEmbedding) {
  const StubSpeakerVerifierClient client(4);
  const Waveform w{16000, tone(4000, 180.0, 0.3)};
  const auto e = speaker_embedding("spk", {"u1"}, [&](const std::string&) { return w; }, client, 0);
  const auto ref = client.embed(w.samples);
  double n2 = 0.0;
  for (float v : ref) n2 += double(v) * v;
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(e[i], ref[i] / std::sqrt(n2), 1e-6);
}

TEST(SpeakerEmbedding, AveragesOneHundredSeededPicks) {
  const StubSpeakerVerifierClient client(4);
  std::vector<std::string> ids;
  for (int i = 0; i < 150; ++i) ids.push_back("u" + std::to_string(i));
  std::set<std::string> loaded;
  auto load = [&](const std::string& id) {
    loaded.insert(id);
    return Waveform{16000, tone(2000, 100.0 + std::stoi(id.substr(1)), 0.2)};
  };
  const auto a = speaker_embedding("spk7", ids, load, client, 11);
  EXPECT_EQ(loaded.size(), 100u);
  const auto picked = loaded;
  loaded.clear();
  const auto b = speaker_embedding("spk7", ids, load, client, 11);
  EXPECT_EQ(a, b);
  EXPECT_EQ(loaded, picked);

  std::vector<double> acc(kSpeakerDim, 0.0);
  for (const auto& id : picked) {
    const auto e = client.embed(load(id).samples);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += e[i];
  }
  double n2 = 0.0;
  for (double v : acc) n2 += v * v;
  for (std::size_t i = 0; i < acc.size(); ++i) EXPECT_NEAR(a[i], acc[i] / std::sqrt(n2), 1e-6);
}

TEST(Text, StubTokensAreDeterministic) {
  const StubTextModelClient client(2);
  const auto t = extract_text_tokens("I am fine.", client);
  ASSERT_EQ(t.n_tokens, 3);
  ASSERT_EQ(t.dim, 1024);
  const std::vector<std::string> words = {"i", "am", "fine"};
  for (std::size_t k = 0; k < words.size(); ++k) {
    const auto e = client.token_embedding(words[k]);
    for (std::size_t c = 0; c < e.size(); ++c) EXPECT_EQ(t.tokens[k * 1024 + c], e[c]);
  }
}

TEST(Text, SpecialTokenIsOneToken) {
  const StubTextModelClient client(2);
  const auto t = extract_text_tokens("[LAUGHTER]", client);
  ASSERT_EQ(t.n_tokens, 1);
  const auto e = client.token_embedding("[LAUGHTER]");
  EXPECT_TRUE(std::equal(e.begin(), e.end(), t.tokens.begin()));
}

TEST(Text, EmptyTranscriptGivesFlaggedZeroRow) {
  const auto t = extract_text_tokens("  ", StubTextModelClient{});
  EXPECT_TRUE(t.empty_transcript);
  EXPECT_EQ(t.n_tokens, 1);
  for (float v : t.tokens) EXPECT_EQ(v, 0.0f);
}

TEST(Text, PaddingKeepsTokensAndZeroesTail) {
  const auto t = extract_text_tokens("one two three", StubTextModelClient(1, 8));
  const auto p = pad_tokens(t, 5);
  EXPECT_EQ(p.valid, 3);
  EXPECT_FALSE(p.truncated);
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    if (i < t.tokens.size()) EXPECT_EQ(p.data[i], t.tokens[i]);
    else EXPECT_EQ(p.data[i], 0.0f);
  }
  const auto q = pad_tokens(t, 2);
  EXPECT_TRUE(q.truncated);
  EXPECT_EQ(q.valid, 2);
}

TEST(Text, MaxTokenCountScansTrainOnly) {
  const std::map<std::string, std::int64_t> n = {{"a", 4}, {"b", 9}, {"c", 2}};
  auto count = [&](const std::string& id) { return n.at(id); };
  EXPECT_EQ(max_token_count({"a", "c"}, count), 4);
  EXPECT_EQ(max_token_count({"a", "b", "c"}, count), 9);
}

SpeechFeatureSet small_speech(std::int64_t frames) {
  SpeechFeatureSet f;
  f.dim = 3;
  f.frames = frames;
  Rng rng(1, "speech");
  f.stack.resize(static_cast<std::size_t>(25 * frames * 3));
  for (auto& v : f.stack) v = static_cast<float>(rng.normal());
  f.mel.assign(static_cast<std::size_t>(frames * 80), 0.25f);
  f.phone_ids.assign(static_cast<std::size_t>(frames), 3);
  f.speaker_embedding.assign(256, 1.0f / 16.0f);
  return f;
}

TEST(Assemble, TruncatesToShorterFraming) {
  LayerStack s{25, 10, 3, std::vector<float>(25 * 10 * 3, 1.0f)};
  std::vector<float> mel(8 * 80, 0.5f);
  std::vector<float> spk(256, 1.0f / 16.0f);
  const auto f = assemble_speech_features(s, mel, {{"AA", 0.0, 1.0}}, spk);
  EXPECT_EQ(f.frames, 8);
  EXPECT_EQ(f.phone_ids.size(), 8u);
  EXPECT_EQ(f.mel.size(), 8u * 80u);
  EXPECT_EQ(f.stack.size(), 25u * 8u * 3u);
}

TEST(Cache, RoundTripIsBitExact) {
  et::TempDir dir;
  FeatureCache cache(dir.path());
  const auto f = small_speech(6);
  cache.put("Ses01F_impro01_F000", FeatureKind::kSpeech, f.to_record("fp-a"));
  const auto back = SpeechFeatureSet::from_record(cache.get("Ses01F_impro01_F000", FeatureKind::kSpeech, "fp-a"));
  EXPECT_EQ(back.stack, f.stack);
  EXPECT_EQ(back.mel, f.mel);
  EXPECT_EQ(back.phone_ids, f.phone_ids);
  EXPECT_EQ(back.speaker_embedding, f.speaker_embedding);
  const auto bytes = read_file_bytes(cache.path_of("Ses01F_impro01_F000", FeatureKind::kSpeech));
  ArrayRecord r = f.to_record("fp-a");
  r.metadata["utterance_id"] = "Ses01F_impro01_F000";
  EXPECT_EQ(bytes, encode_record(r));
}

CacheError::Kind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const CacheError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no CacheError";
  return CacheError::Kind::kIo;
}

TEST(Cache, MissingStaleAndCorruptAreDistinguished) {
  et::TempDir dir;
  FeatureCache cache(dir.path());
  EXPECT_EQ(kind_of([&] { cache.get("nope", FeatureKind::kText, "fp"); }), CacheError::Kind::kNotFound);
  TextFeatureSet t;
  t.n_tokens = 1;
  t.dim = 2;
  t.tokens = {1.0f, 2.0f};
  cache.put("u", FeatureKind::kText, t.to_record("bert-v1"));
  EXPECT_TRUE(cache.fresh("u", FeatureKind::kText, "bert-v1"));
  EXPECT_FALSE(cache.fresh("u", FeatureKind::kText, "bert-v2"));
  EXPECT_EQ(kind_of([&] { cache.get("u", FeatureKind::kText, "bert-v2"); }), CacheError::Kind::kStale);

  const auto path = cache.path_of("u", FeatureKind::kText);
  auto bytes = read_file_bytes(path);
  bytes[bytes.size() - 3] ^= std::byte{0x5a};
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                              static_cast<std::streamsize>(bytes.size()));
  EXPECT_EQ(kind_of([&] { cache.get("u", FeatureKind::kText, "bert-v1"); }), CacheError::Kind::kCorrupt);
  EXPECT_EQ(kind_of([&] {
              std::ofstream(path, std::ios::binary | std::ios::trunc) << "EMO";
              cache.get("u", FeatureKind::kText, "bert-v1");
            }),
            CacheError::Kind::kCorrupt);
}

TEST(Cache, NonFiniteArraysRefused) {
  et::TempDir dir;
  FeatureCache cache(dir.path());
  auto f = small_speech(2);
  f.stack[4] = std::nanf("");
  EXPECT_THROW(cache.put("x", FeatureKind::kSpeech, f.to_record("fp")), CacheError);
}

TEST(Cache, UnsafeIdsGetDistinctPaths) {
  FeatureCache cache("/tmp/unused");
  EXPECT_NE(cache.path_of("a/b", FeatureKind::kSpeech), cache.path_of("a_b", FeatureKind::kSpeech));
  EXPECT_EQ(cache.path_of("a/b", FeatureKind::kSpeech).parent_path(), std::filesystem::path("/tmp/unused"));
}

TEST(SpeechFeatures, ValidationCatchesBrokenInvariants) {
  auto f = small_speech(4);
  EXPECT_NO_THROW(f.validate());
  auto g = f;
  g.phone_ids[1] = 128;
  EXPECT_THROW(g.validate(), DataError);
  g = f;
  g.speaker_embedding[0] = 0.5f;
  EXPECT_THROW(g.validate(), DataError);
  g = f;
  g.mel.pop_back();
  EXPECT_THROW(g.validate(), DataError);
}

}  // namespace
