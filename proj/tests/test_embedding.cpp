// Copyright 2026 The fadprof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstring>

#include "fadprof/bridge.hpp"
#include "fadprof/encoders.hpp"
#include "fadprof/perturb.hpp"
#include "fadprof/synth.hpp"
#include "fadprof/verify.hpp"
#include "support.hpp"
#include "tmpdir.hpp"

using namespace fadprof;
using fadprof::testing::TempDir;

namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

EmbeddingSet small_set() {
  EmbeddingSet s;
  s.ids = {"a", "b", "c"};
  s.matrix.resize(3, 2);
  s.matrix << 1.0f, -2.5f, 0.125f, 3.0f, 1e-30f, -0.0f;
  return s;
}

}  // namespace

TEST(Emb1, ByteLayout) {
  const auto bytes = encode_emb1(small_set());
  ASSERT_EQ(bytes.size(), 20u + 5u + 3u * 2u * 4u);
  EXPECT_EQ(std::memcmp(bytes.data(), "FEMB", 4), 0);
  auto u32 = [&](std::size_t at) {
    return std::uint32_t(bytes[at]) | std::uint32_t(bytes[at + 1]) << 8 | std::uint32_t(bytes[at + 2]) << 16 |
           std::uint32_t(bytes[at + 3]) << 24;
  };
  EXPECT_EQ(u32(4), 1u);
  EXPECT_EQ(u32(8), 2u);
  EXPECT_EQ(u32(12), 3u);
  EXPECT_EQ(u32(16), 5u);
  EXPECT_EQ(std::string(bytes.begin() + 20, bytes.begin() + 25), "a\nb\nc");
  float first;
  std::memcpy(&first, bytes.data() + 25, 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(Emb1, RoundTripIsBitExact) {
  const auto set = small_set();
  const auto back = decode_emb1(encode_emb1(set));
  EXPECT_EQ(back.ids, set.ids);
  EXPECT_EQ(std::memcmp(back.matrix.data(), set.matrix.data(), 6 * sizeof(float)), 0);
}

TEST(Emb1, TrailingNewlineInIdTableIsTolerated) {
  auto bytes = encode_emb1(small_set());
  bytes.insert(bytes.begin() + 25, '\n');
  bytes[16] = 6;
  EXPECT_EQ(decode_emb1(bytes).ids, small_set().ids);
}

TEST(Emb1, RowsAreSortedById) {
  EmbeddingSet s;
  s.ids = {"zeta", "alpha"};
  s.matrix.resize(2, 1);
  s.matrix << 2.0f, 1.0f;
  const auto back = decode_emb1(encode_emb1(s));
  EXPECT_EQ(back.ids, (std::vector<std::string>{"alpha", "zeta"}));
  EXPECT_EQ(back.matrix(0, 0), 1.0f);
}

TEST(Emb1, MalformedInputs) {
  auto bytes = encode_emb1(small_set());
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_TRUE(contains(error_of([&] { decode_emb1(truncated); }), "unrecognized format"));
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_TRUE(contains(error_of([&] { decode_emb1(magic); }), "unrecognized format"));
  auto version = bytes;
  version[4] = 2;
  EXPECT_TRUE(contains(error_of([&] { decode_emb1(version); }), "unrecognized format"));
  auto nan = small_set();
  nan.matrix(1, 1) = std::nanf("");
  EXPECT_TRUE(contains(error_of([&] { decode_emb1(encode_emb1(nan)); }), "non-finite embedding for clip 'b'"));
  auto dup = small_set();
  dup.ids[2] = "a";
  EXPECT_TRUE(contains(error_of([&] { decode_emb1(encode_emb1(dup)); }), "duplicate"));
}

TEST(EncoderSpec, KnownEncodersCarryReferenceShapes) {
  EXPECT_EQ(known_encoder("Whisper")->dim, 1280);
  EXPECT_EQ(known_encoder("CLAP")->native_rate, 48000);
  EXPECT_EQ(known_encoder("EnCodec")->native_rate, 24000);
  EXPECT_EQ(known_encoder("wav2vec2")->dim, 768);
  EncoderSpec bad{"whisper", 16000, 512, EncoderSource::parse("bridge:x")};
  EXPECT_THROW(validate_encoder_spec(bad), Error);
  EncoderSpec good{"whisper", 16000, 1280, EncoderSource::parse("bridge:x")};
  EXPECT_NO_THROW(validate_encoder_spec(good));
}

TEST(EncoderSpec, SourceParsing) {
  EXPECT_EQ(EncoderSource::parse("files:/tmp/x").type, EncoderSource::Type::files);
  EXPECT_EQ(EncoderSource::parse("bridge:python3 -m bridge").target, "python3 -m bridge");
  EXPECT_THROW(EncoderSource::parse("melstats"), Error);
  EXPECT_THROW(EncoderSource::parse("magic:x"), Error);
}

TEST(Builtin, MelstatsShapeAndGainSensitivity) {
  const auto clip = verify::test_signal(1.0, 16000);
  const auto x = to_double(clip.samples);
  const auto e = melstats_embedding(x, 16000);
  ASSERT_EQ(e.size(), std::size_t(kMelBands));
  std::vector<double> louder(x);
  for (double& v : louder) v *= 4.0;
  const auto e2 = melstats_embedding(louder, 16000);
  double diff = 0;
  for (int i = 0; i < kMelBands; ++i) diff += std::abs(e2[i] - e[i]);
  EXPECT_GT(diff, 0.0);
}

TEST(Builtin, MelFilterbankPeaksAreUnitAndOrdered) {
  const auto fb = mel_filterbank(kMelBands, 1024, 16000);
  std::size_t prev = 0;
  for (const auto& band : fb) {
    const auto peak = std::size_t(std::max_element(band.begin(), band.end()) - band.begin());
    EXPECT_LE(*std::max_element(band.begin(), band.end()), 1.0);
    EXPECT_GE(peak, prev);
    prev = peak;
  }
}

TEST(Builtin, EnvseqIsGainInvariantAndPeakNormalized) {
  const auto clip = synth::envelope_clip({}, 3);
  const auto x = to_double(clip.samples);
  const auto e = envseq_embedding(x);
  ASSERT_EQ(e.size(), std::size_t(kContourPoints));
  EXPECT_DOUBLE_EQ(*std::max_element(e.begin(), e.end()), 1.0);
  std::vector<double> quiet(x);
  for (double& v : quiet) v *= 0.01;
  const auto q = envseq_embedding(quiet);
  for (int i = 0; i < kContourPoints; ++i) EXPECT_NEAR(q[i], e[i], 1e-12);
}

TEST(Builtin, EnvseqSeesReversalMelstatsDoesNot) {
  const auto clip = synth::envelope_clip({}, 5);
  const auto rev = reverse(clip);
  const auto x = to_double(clip.samples), r = to_double(rev.samples);
  double env_diff = 0.0, mel_diff = 0.0, mel_norm = 0.0;
  const auto ex = envseq_embedding(x), er = envseq_embedding(r);
  for (int i = 0; i < kContourPoints; ++i) env_diff += std::abs(ex[i] - er[i]);
  const auto mx = melstats_embedding(x, 16000), mr = melstats_embedding(r, 16000);
  for (int i = 0; i < kMelBands; ++i) {
    mel_diff += std::abs(mx[i] - mr[i]);
    mel_norm += std::abs(mx[i]);
  }
  EXPECT_GT(env_diff, 1.0);
  EXPECT_LT(mel_diff / mel_norm, 0.02);
}

TEST(Builtin, EmbedResamplesAndSkipsShortClips) {
  synth::CorpusOptions opt;
  opt.count = 4;
  opt.sample_rate = 22050;
  opt.seconds = 1.0;
  auto clips = synth::envelope_corpus(opt);
  clips.push_back(AudioClip{"tiny", std::vector<float>(500, 0.1f), 22050});
  const auto set = embed_builtin("melstats", clips, 2);
  EXPECT_EQ(set.count(), 4u);
  EXPECT_EQ(set.dim(), std::size_t(kMelBands));
  EXPECT_TRUE(std::is_sorted(set.ids.begin(), set.ids.end()));
  EXPECT_THROW(embed_builtin("melstats", std::span(clips).subspan(3), 1), Error);  // one usable clip
}

TEST(Builtin, WorkerCountDoesNotChangeResults) {
  synth::CorpusOptions opt;
  opt.count = 9;
  opt.seconds = 1.0;
  const auto clips = synth::envelope_corpus(opt);
  const auto a = embed_builtin("envseq", clips, 1);
  const auto b = embed_builtin("envseq", clips, 4);
  EXPECT_EQ(encode_emb1(a), encode_emb1(b));
}

class Bridge : public ::testing::Test {
 protected:
  void SetUp() override {
    synth::CorpusOptions opt;
    opt.count = 3;
    opt.seconds = 0.5;
    synth::write_corpus(dir.path() / "wav", synth::envelope_corpus(opt));
  }
  EncoderSpec spec(const std::string& mode, int dim = 8) {
    return {"fake", 16000, dim,
            EncoderSource::parse(std::string("bridge:") + FADPROF_FAKE_BRIDGE + " --mode " + mode + " --dim 8")};
  }
  fs::path out() const { return dir.path() / "emb" / "out.emb1"; }
  TempDir dir;
};

TEST_F(Bridge, ValidOutputIsAccepted) {
  const auto set = embed_via_bridge(spec("ok"), dir.path() / "wav", out());
  EXPECT_EQ(set.count(), 3u);
  EXPECT_EQ(set.dim(), 8u);
  EXPECT_TRUE(std::is_sorted(set.ids.begin(), set.ids.end()));
  EXPECT_TRUE(contains(bridge_detail::tail_of(out().string() + ".log"), "rate=16000"));
  // Deterministic across invocations.
  const auto first = wav_detail::read_file(out());
  embed_via_bridge(spec("ok"), dir.path() / "wav", out());
  EXPECT_EQ(wav_detail::read_file(out()), first);
}

TEST_F(Bridge, DimensionMismatch) {
  EXPECT_TRUE(contains(error_of([&] { embed_via_bridge(spec("dim512"), dir.path() / "wav", out()); }),
                       "encoder dim mismatch"));
}

TEST_F(Bridge, MissingClipIsNamed) {
  const auto msg = error_of([&] { embed_via_bridge(spec("omit"), dir.path() / "wav", out()); });
  EXPECT_TRUE(contains(msg, "manifest mismatch")) << msg;
  EXPECT_TRUE(contains(msg, "missing clip_0000")) << msg;
}

TEST_F(Bridge, UnexpectedClipIsNamed) {
  const auto msg = error_of([&] { embed_via_bridge(spec("extra"), dir.path() / "wav", out()); });
  EXPECT_TRUE(contains(msg, "unexpected zz_stranger")) << msg;
}

TEST_F(Bridge, NonzeroExitCarriesDiagnostics) {
  const auto msg = error_of([&] { embed_via_bridge(spec("fail"), dir.path() / "wav", out()); });
  EXPECT_TRUE(contains(msg, "bridge failed")) << msg;
  EXPECT_TRUE(contains(msg, "(exit 3)")) << msg;
  EXPECT_TRUE(contains(msg, "model weights not found")) << msg;
}

TEST_F(Bridge, NonFiniteOutputIsRejected) {
  const auto msg = error_of([&] { embed_via_bridge(spec("nan"), dir.path() / "wav", out()); });
  EXPECT_TRUE(contains(msg, "non-finite embedding for clip 'clip_0000'")) << msg;
}

TEST_F(Bridge, MissingExecutable) {
  EncoderSpec s{"fake", 16000, 8, EncoderSource::parse("bridge:/nonexistent/bridge")};
  EXPECT_TRUE(contains(error_of([&] { embed_via_bridge(s, dir.path() / "wav", out()); }), "exit 127"));
}
