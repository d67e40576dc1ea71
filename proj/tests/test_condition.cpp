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

#include <map>

#include "fadprof/condition.hpp"
#include "fadprof/random.hpp"

using namespace fadprof;

TEST(Grid, HasThirtySevenConditionsInCanonicalOrder) {
  const auto grid = default_grid();
  const std::vector<std::string> expected = {
      "noise_snr_60dB",   "noise_snr_40dB",   "noise_snr_20dB",   "noise_snr_10dB",   "noise_snr_0dB",
      "noise_snr_-5dB",   "lowpass_8000hz",   "lowpass_6000hz",   "lowpass_4000hz",   "lowpass_2000hz",
      "lowpass_1000hz",   "reverb_rt60_0.1s", "reverb_rt60_0.2s", "reverb_rt60_0.25s", "reverb_rt60_0.4s",
      "reverb_rt60_0.5s", "reverb_rt60_0.6s", "reverb_rt60_0.8s", "reverb_rt60_1.0s", "reverb_rt60_2.0s",
      "pitch_-8st",       "pitch_-4st",       "pitch_-2st",       "pitch_-1st",       "pitch_+1st",
      "pitch_+2st",       "pitch_+4st",       "pitch_+8st",       "stretch_0.9x",     "stretch_1.1x",
      "formant_1.3x",     "formant_1.4x",     "reverse",          "shuffle_1000ms",   "shuffle_500ms",
      "shuffle_250ms",    "shuffle_100ms"};
  ASSERT_EQ(grid.size(), expected.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(grid[i].id, expected[i]);
}

TEST(Grid, AxisPartition) {
  std::map<Axis, int> counts;
  for (const auto& c : default_grid()) ++counts[c.axis];
  EXPECT_EQ(counts[Axis::recall], 6);
  EXPECT_EQ(counts[Axis::precision], 20);
  EXPECT_EQ(counts[Axis::semantic], 6);
  EXPECT_EQ(counts[Axis::structural], 5);
}

TEST(Grid, PitchMagnitudeDecidesAxis) {
  EXPECT_EQ(parse_condition("pitch_-2st").axis, Axis::recall);
  EXPECT_EQ(parse_condition("pitch_+4st").axis, Axis::semantic);
  EXPECT_EQ(parse_condition("stretch_1.1x").axis, Axis::recall);
  EXPECT_EQ(parse_condition("reverse").axis, Axis::structural);
}

TEST(ConditionId, EveryGridIdRoundTrips) {
  for (const auto& c : default_grid()) EXPECT_EQ(parse_condition(c.id), c) << c.id;
}

TEST(ConditionId, ParsesParameters) {
  EXPECT_DOUBLE_EQ(parse_condition("noise_snr_-5dB").param, -5.0);
  EXPECT_DOUBLE_EQ(parse_condition("reverb_rt60_0.25s").param, 0.25);
  EXPECT_DOUBLE_EQ(parse_condition("formant_1.4x").param, 1.4);
  EXPECT_DOUBLE_EQ(parse_condition("shuffle_250ms").param, 250.0);
  EXPECT_EQ(parse_condition("lowpass_3000hz").id, "lowpass_3000hz");
}

TEST(ConditionId, RejectsUnknown) {
  for (const char* bad : {"", "noise", "noise_snr_60db", "pitch_3", "echo_1s", "reverb_rt60_1s", "shuffle_-1ms"}) {
    EXPECT_THROW(parse_condition(bad), Error) << bad;
  }
  try {
    parse_condition("chorus_2x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unknown condition id"), std::string::npos);
  }
}

TEST(ConditionId, RejectsNonCanonicalSpellings) {
  for (const char* bad : {"pitch_8st", "noise_snr_+60dB", "reverb_rt60_1.00s", "stretch_1.10x"}) {
    EXPECT_THROW(parse_condition(bad), Error) << bad;
  }
}

TEST(SeverityKey, OrdersBySeverity) {
  EXPECT_LT(severity_key(parse_condition("noise_snr_60dB")), severity_key(parse_condition("noise_snr_0dB")));
  EXPECT_LT(severity_key(parse_condition("lowpass_8000hz")), severity_key(parse_condition("lowpass_1000hz")));
  EXPECT_LT(severity_key(parse_condition("shuffle_1000ms")), severity_key(parse_condition("shuffle_100ms")));
  EXPECT_LT(severity_key(parse_condition("reverb_rt60_0.1s")), severity_key(parse_condition("reverb_rt60_2.0s")));
}

TEST(KeyedStream, DeterministicAndKeySensitive) {
  KeyedStream a(stream_key(1, "clip", "noise_snr_0dB"));
  KeyedStream b(stream_key(1, "clip", "noise_snr_0dB"));
  KeyedStream c(stream_key(2, "clip", "noise_snr_0dB"));
  KeyedStream d(stream_key(1, "clip", "noise_snr_10dB"));
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
    EXPECT_NE(va, d.next_u64());
  }
}

TEST(KeyedStream, HasherIsLengthPrefixed) {
  EXPECT_NE(Hasher{}.add("ab").add("c").value(), Hasher{}.add("a").add("bc").value());
}

TEST(KeyedStream, NormalMoments) {
  KeyedStream s(42);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = s.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.01);
}

TEST(KeyedStream, BelowIsUniform) {
  KeyedStream s(9);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[s.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5 * std::sqrt(n / 7.0));
}
