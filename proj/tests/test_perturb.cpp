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

#include <cmath>
#include <numbers>

#include "fadprof/fft.hpp"
#include "fadprof/perturb.hpp"
#include "fadprof/verify.hpp"

using namespace fadprof;

namespace {

constexpr int kFs = 16000;

double correlation(std::span<const float> a, std::span<const float> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// Frequency of the largest spectral peak of the middle of x, refined by
/// parabolic interpolation on log magnitude (Hann window, zero-padded 65536 FFT).
double peak_frequency(std::span<const float> x, int fs) {
  const std::size_t n = 8192, nfft = 65536;
  const std::size_t start = (x.size() - n) / 2;
  std::vector<double> frame(n);
  for (std::size_t i = 0; i < n; ++i) {
    frame[i] = x[start + i] * (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n)));
  }
  RealFft fft(nfft);
  std::vector<std::complex<double>> spec(fft.bins());
  fft.forward(frame, spec);
  std::size_t best = 1;
  for (std::size_t b = 1; b + 1 < spec.size(); ++b)
    if (std::abs(spec[b]) > std::abs(spec[best])) best = b;
  const double l = std::log(std::abs(spec[best - 1])), c = std::log(std::abs(spec[best])),
               r = std::log(std::abs(spec[best + 1]));
  const double delta = 0.5 * (l - r) / (l - 2 * c + r);
  return (double(best) + delta) * fs / double(nfft);
}

/// Amplitudes of harmonics k * f0 measured by projection over the middle of x.
std::vector<double> harmonic_amplitudes(std::span<const float> x, int fs, double f0, int count) {
  std::vector<double> amps;
  const std::size_t skip = x.size() / 4;
  for (int k = 1; k <= count; ++k) {
    double s = 0, c = 0;
    std::size_t n = 0;
    for (std::size_t i = skip; i + skip < x.size(); ++i, ++n) {
      const double ph = 2.0 * std::numbers::pi * k * f0 * double(i) / fs;
      s += x[i] * std::sin(ph);
      c += x[i] * std::cos(ph);
    }
    amps.push_back(2.0 * std::hypot(s, c) / double(n));
  }
  return amps;
}

/// 100 Hz harmonic comb whose amplitudes follow a single resonance at
/// formant_hz.
AudioClip vowel(double formant_hz, double seconds = 2.0) {
  AudioClip c{"vowel", std::vector<float>(std::size_t(seconds * kFs)), kFs};
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    double s = 0.0;
    for (int k = 1; k * 100.0 < 0.45 * kFs; ++k) {
      const double f = 100.0 * k;
      const double a = std::exp(-0.5 * std::pow((f - formant_hz) / 250.0, 2)) + 0.02;
      s += a * std::sin(2.0 * std::numbers::pi * f * double(i) / kFs);
    }
    c.samples[i] = float(0.05 * s);
  }
  return c;
}

std::size_t argmax(const std::vector<double>& v) {
  return std::size_t(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST(Noise, ResidualSnrIsExact) {
  const auto clip = verify::test_signal(2.0, kFs);
  for (double snr : {60.0, 40.0, 20.0, 10.0, 0.0, -5.0}) {
    const auto out = add_noise(clip, snr, 123);
    EXPECT_NEAR(verify::residual_snr_db(clip, out), snr, 0.1) << snr;
  }
}

TEST(Noise, KeyedDeterminism) {
  const auto clip = verify::test_signal(0.5, kFs);
  EXPECT_EQ(add_noise(clip, 10, 5).samples, add_noise(clip, 10, 5).samples);
  EXPECT_NE(add_noise(clip, 10, 5).samples, add_noise(clip, 10, 6).samples);
  const auto c = parse_condition("noise_snr_10dB");
  EXPECT_EQ(apply(clip, c, 1).samples, apply(clip, c, 1).samples);
  EXPECT_NE(apply(clip, c, 1).samples, apply(clip, c, 2).samples);
}

TEST(Noise, SilenceIsAnError) {
  AudioClip silent{"z", std::vector<float>(1000, 0.0f), kFs};
  EXPECT_THROW(add_noise(silent, 10, 1), Error);
}

TEST(Lowpass, HalfPowerAtCutoffAndRolloff) {
  for (double fc : {1000.0, 2000.0, 3000.0}) {
    const auto at = verify::tone(fc, 1.0, kFs);
    EXPECT_NEAR(verify::sine_gain_db(at, lowpass(at, fc)), -3.01, 0.2) << fc;
    const auto above = verify::tone(2 * fc, 1.0, kFs);
    EXPECT_LE(verify::sine_gain_db(above, lowpass(above, fc)), -11.0) << fc;
    const auto below = verify::tone(fc / 10, 1.0, kFs);
    EXPECT_NEAR(verify::sine_gain_db(below, lowpass(below, fc)), 0.0, 0.05) << fc;
  }
}

TEST(Lowpass, CutoffAtNyquistPassesThrough) {
  const auto clip = verify::test_signal(0.5, kFs);
  EXPECT_EQ(lowpass(clip, 8000.0).samples, clip.samples);
}

namespace {

/// RT60 from Schroeder backward integration of the tail, straight line fit
/// between -5 and -35 dB, extrapolated to -60 dB.
double schroeder_rt60(const std::vector<double>& ir, int fs) {
  std::vector<double> edc(ir.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = ir.size(); i-- > 1;) {
    acc += ir[i] * ir[i];
    edc[i] = acc;
  }
  const double total = edc[1];
  double st = 0, sd = 0, stt = 0, std_ = 0;
  int n = 0;
  for (std::size_t i = 1; i < ir.size(); ++i) {
    const double db = 10.0 * std::log10(edc[i] / total);
    if (db > -5.0 || db < -35.0) continue;
    const double t = double(i) / fs;
    st += t;
    sd += db;
    stt += t * t;
    std_ += t * db;
    ++n;
  }
  const double slope = (n * std_ - st * sd) / (n * stt - st * st);
  return -60.0 / slope;
}

}  // namespace

TEST(Reverb, ImpulseResponseShape) {
  for (double rt60 : {0.2, 0.5, 1.0, 2.0}) {
    const auto ir = reverb_impulse_response(rt60, kFs, 77);
    EXPECT_EQ(ir.size(), std::size_t(std::floor(1.5 * rt60 * kFs)) + 1);
    EXPECT_EQ(ir[0], 1.0);
    double tail = 0.0;
    for (std::size_t i = 1; i < ir.size(); ++i) tail += ir[i] * ir[i];
    EXPECT_NEAR(tail, 1.0, 1e-9);  // 0 dB direct-to-reverberant
    EXPECT_NEAR(schroeder_rt60(ir, kFs), rt60, 0.1 * rt60) << rt60;
    EXPECT_NEAR(verify::fitted_rt60(ir, kFs, rt60), rt60, 0.1 * rt60) << rt60;
  }
}

TEST(Reverb, PreservesLengthAndRms) {
  const auto clip = verify::test_signal(1.5, kFs);
  const auto out = reverb(clip, 0.8, 3);
  ASSERT_EQ(out.samples.size(), clip.samples.size());
  EXPECT_NEAR(dsp::rms<float>(out.samples), dsp::rms<float>(clip.samples), 1e-6);
  EXPECT_LT(correlation(out.samples, clip.samples), 0.99);
}

TEST(Reverb, VanishingTailIsIdentity) {
  const auto clip = verify::test_signal(0.5, kFs);
  const auto out = reverb(clip, 1e-5, 3);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) EXPECT_NEAR(out.samples[i], clip.samples[i], 1e-6);
}

TEST(Stretch, DurationFollowsRateFactor) {
  const auto clip = verify::test_signal(5.0, kFs);
  EXPECT_NEAR(double(time_stretch(clip, 1.1).samples.size()), 5.0 * kFs / 1.1, stft::kHop);
  EXPECT_NEAR(double(time_stretch(clip, 0.9).samples.size()), 5.556 * kFs, stft::kHop);
}

TEST(Stretch, UnitFactorIsNearIdentity) {
  const auto clip = verify::test_signal(1.0, kFs);
  const auto out = time_stretch(clip, 1.0);
  ASSERT_EQ(out.samples.size(), clip.samples.size());
  EXPECT_GT(correlation(out.samples, clip.samples), 0.999);
}

TEST(Stretch, PitchIsPreserved) {
  const auto clip = verify::tone(440.0, 3.0, kFs);
  for (double f : {0.9, 1.1}) EXPECT_NEAR(peak_frequency(time_stretch(clip, f).samples, kFs), 440.0, 1.0) << f;
}

TEST(Pitch, ShiftsPeakBySemitoneRatio) {
  const auto clip = verify::tone(440.0, 3.0, kFs);
  for (double st : {-8.0, -4.0, -1.0, 2.0, 8.0}) {
    const auto out = pitch_shift(clip, st);
    EXPECT_NEAR(double(out.samples.size()), double(clip.samples.size()), stft::kHop);
    const double expected = 440.0 * std::exp2(st / 12.0);
    EXPECT_NEAR(peak_frequency(out.samples, kFs), expected, 0.005 * expected) << st;
  }
}

TEST(Pitch, ZeroShiftIsNearIdentity) {
  const auto clip = verify::test_signal(1.0, kFs);
  EXPECT_GT(correlation(pitch_shift(clip, 0.0).samples, clip.samples), 0.999);
}

TEST(Formant, EnvelopeMovesWhileHarmonicsStay) {
  const auto clip = vowel(1000.0);
  const auto before = harmonic_amplitudes(clip.samples, kFs, 100.0, 35);
  EXPECT_EQ(argmax(before), 9u);  // 1000 Hz
  for (double factor : {1.3, 1.4}) {
    const auto out = formant_shift(clip, factor);
    ASSERT_NEAR(double(out.samples.size()), double(clip.samples.size()), stft::kHop);
    const auto after = harmonic_amplitudes(out.samples, kFs, 100.0, 35);
    const double peak_hz = 100.0 * double(argmax(after) + 1);
    EXPECT_NEAR(peak_hz, 1000.0 * factor, 150.0) << factor;
    // Energy stays on the 100 Hz comb: the fundamental is unchanged.
    double comb = 0.0;
    for (double a : after) comb += 0.5 * a * a;
    EXPECT_GT(comb / dsp::mean_square<float>(std::span<const float>(out.samples).subspan(out.samples.size() / 4,
                                                                                           out.samples.size() / 2)),
              0.9)
        << factor;
  }
}

TEST(Reverse, BitExactInvolution) {
  const auto clip = verify::test_signal(0.7, kFs);
  const auto once = reverse(clip);
  EXPECT_EQ(once.samples.front(), clip.samples.back());
  EXPECT_EQ(reverse(once).samples, clip.samples);
}

TEST(Shuffle, DurationArithmetic) {
  const auto clip = verify::test_signal(5.0, kFs);
  const auto out = shuffle_chunks(clip, 1000.0, 9);
  EXPECT_NEAR(double(out.samples.size()), (5.0 - 4 * 0.01) * kFs, 1.0);
  // 5 s in 300 ms chunks: 16 full chunks plus a 200 ms tail, 16 joins.
  const auto odd = shuffle_chunks(clip, 300.0, 9);
  EXPECT_NEAR(double(odd.samples.size()), (5.0 - 16 * 0.01) * kFs, 1.0);
}

TEST(Shuffle, ConstantInputStaysFlat) {
  AudioClip flat{"flat", std::vector<float>(3 * kFs, -0.3f), kFs};
  for (double ms : {1000.0, 500.0, 250.0, 100.0}) {
    const auto out = shuffle_chunks(flat, ms, 4);
    for (float v : out.samples) ASSERT_NEAR(v / -0.3, 1.0, 0.01) << ms;
  }
}

TEST(Shuffle, ReordersChunksAndIsKeyed) {
  AudioClip ramp{"ramp", std::vector<float>(2 * kFs), kFs};
  for (std::size_t i = 0; i < ramp.samples.size(); ++i) ramp.samples[i] = float(i) / ramp.samples.size();
  const auto a = shuffle_chunks(ramp, 250.0, 11);
  EXPECT_EQ(a.samples, shuffle_chunks(ramp, 250.0, 11).samples);
  // Sample 100 of the output comes from the first placed chunk, unblended.
  const std::size_t chunk = kFs / 4;
  const std::size_t first_chunk = std::size_t(a.samples[100] * ramp.samples.size()) / chunk;
  EXPECT_FLOAT_EQ(a.samples[100], ramp.samples[first_chunk * chunk + 100]);
  // Never the identity order.
  bool moved = false;
  for (std::uint64_t key = 0; key < 20; ++key) {
    const auto perm = keyed_permutation(4, key);
    EXPECT_NE(perm, (std::vector<std::size_t>{0, 1, 2, 3}));
    moved = moved || perm != keyed_permutation(4, key + 1);
  }
  EXPECT_TRUE(moved);
}

TEST(Shuffle, TooShortIsAnError) {
  AudioClip shorty{"s", std::vector<float>(kFs, 0.1f), kFs};
  EXPECT_THROW(shuffle_chunks(shorty, 1000.0, 1), Error);
}

TEST(Apply, EveryGridConditionKeepsRateAndExpectedLength) {
  const auto clip = verify::test_signal(3.0, kFs);
  for (const auto& c : default_grid()) {
    const auto out = apply(clip, c, 42);
    EXPECT_EQ(out.sample_rate, kFs) << c.id;
    EXPECT_EQ(out.id, "signal__" + c.id);
    double expected = double(clip.samples.size());
    double tol = 0.0;
    if (c.kind == PerturbKind::stretch) {
      expected /= c.param;
      tol = stft::kHop;
    } else if (c.kind == PerturbKind::shuffle) {
      const std::size_t chunk = std::size_t(c.param * kFs / 1000.0);
      const std::size_t pieces = (clip.samples.size() + chunk - 1) / chunk;
      expected -= double(pieces - 1) * 0.01 * kFs;
      tol = 1.0;
    } else if (c.kind == PerturbKind::pitch || c.kind == PerturbKind::formant) {
      tol = stft::kHop;
    }
    EXPECT_NEAR(double(out.samples.size()), expected, tol) << c.id;
    for (float v : out.samples) ASSERT_TRUE(std::isfinite(v)) << c.id;
  }
}

namespace {

/// Envelope peak from the harmonic comb: strongest 100 Hz harmonic refined by
/// a parabola through the log amplitudes of it and its neighbours.
double comb_envelope_peak_hz(std::span<const float> x) {
  const auto amps = harmonic_amplitudes(x, kFs, 100.0, 40);
  const std::size_t k = argmax(amps);
  if (k == 0 || k + 1 >= amps.size()) return 100.0 * double(k + 1);
  const double l = std::log(amps[k - 1]), c = std::log(amps[k]), r = std::log(amps[k + 1]);
  return 100.0 * (double(k + 1) + 0.5 * (l - r) / (l - 2 * c + r));
}

}  // namespace

TEST(Formant, EnvelopePeakFollowsFactor) {
  const auto clip = vowel(1000.0, 3.0);
  const double bin_hz = double(kFs) / stft::kWindow;
  EXPECT_NEAR(comb_envelope_peak_hz(clip.samples), 1000.0, bin_hz);
  for (double factor : {1.3, 1.4}) {
    const auto out = formant_shift(clip, factor);
    // The 40-coefficient envelope resolves ~400 Hz; allow 3 % of the target.
    EXPECT_NEAR(comb_envelope_peak_hz(out.samples), 1000.0 * factor, 0.03 * 1000.0 * factor) << factor;
  }
}

TEST(Formant, UnitFactorIsNearIdentity) {
  const auto clip = verify::test_signal(1.0, kFs);
  EXPECT_GT(correlation(formant_shift(clip, 1.0).samples, clip.samples), 0.99);
}
