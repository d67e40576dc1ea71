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

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/dsp.hpp"
#include "fadprof/loudness.hpp"
#include "fadprof/perturb.hpp"
#include "fadprof/random.hpp"

namespace fadprof::verify {

struct Check {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;  ///< for bound checks, the limit itself
  bool passed = false;
  std::string unit;
};

inline AudioClip tone(double freq, double seconds, int fs, double amplitude = 0.5, std::string id = "tone") {
  AudioClip c{std::move(id), {}, fs};
  const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * freq * double(i) / fs));
  }
  return c;
}

/// Two-tone plus slow amplitude modulation, so envelope and spectrum are
/// both non-trivial.
inline AudioClip test_signal(double seconds, int fs) {
  AudioClip c{"signal", {}, fs};
  const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i) / fs;
    const double env = 0.6 + 0.4 * std::sin(2.0 * std::numbers::pi * 1.5 * t);
    c.samples[i] = static_cast<float>(
        env * (0.3 * std::sin(2.0 * std::numbers::pi * 220.0 * t) + 0.15 * std::sin(2.0 * std::numbers::pi * 1330.0 * t)));
  }
  return c;
}

/// Steady-state sine gain in dB, skipping the filter transient.
inline double sine_gain_db(const AudioClip& in, const AudioClip& out) {
  const std::size_t skip = in.samples.size() / 4;
  const auto a = std::span<const float>(in.samples).subspan(skip);
  const auto b = std::span<const float>(out.samples).subspan(skip);
  return 10.0 * std::log10(dsp::mean_square(b) / dsp::mean_square(a));
}

inline double residual_snr_db(const AudioClip& clean, const AudioClip& noisy) {
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    const double s = clean.samples[i];
    const double d = double(noisy.samples[i]) - s;
    signal += s * s;
    noise += d * d;
  }
  return 10.0 * std::log10(signal / noise);
}

/// Time at which the log-energy envelope of the reverb tail, fitted by least
/// squares over 10 ms blocks spanning the first 60 dB, reaches -60 dB.
inline double fitted_rt60(const std::vector<double>& ir, int fs, double nominal_rt60) {
  const std::size_t block = static_cast<std::size_t>(fs / 100);
  const std::size_t span = static_cast<std::size_t>(nominal_rt60 * fs);
  std::vector<double> t, db;
  for (std::size_t start = 1; start + block <= std::min(ir.size(), span + 1); start += block) {
    double e = 0.0;
    for (std::size_t i = start; i < start + block; ++i) e += ir[i] * ir[i];
    t.push_back((double(start - 1) + block / 2.0) / fs);
    db.push_back(10.0 * std::log10(e / block));
  }
  const double n = static_cast<double>(t.size());
  double st = 0, sd = 0, stt = 0, std_ = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sd += db[i];
    stt += t[i] * t[i];
    std_ += t[i] * db[i];
  }
  const double slope = (n * std_ - st * sd) / (n * stt - st * st);
  return -60.0 / slope;
}

inline Check within(std::string name, double measured, double expected, double tol, std::string unit) {
  return {std::move(name), measured, expected, tol, std::abs(measured - expected) <= tol, std::move(unit)};
}

inline Check at_least(std::string name, double measured, double limit, std::string unit) {
  return {std::move(name), measured, limit, limit, measured >= limit, std::move(unit)};
}

/// Runs the conformance oracles on synthesized tones.
inline std::vector<Check> run_checks(std::uint64_t seed = 0) {
  std::vector<Check> checks;
  constexpr int fs = 16000;
  const AudioClip signal = test_signal(2.0, fs);

  for (double snr : {60.0, 40.0, 20.0, 10.0, 0.0, -5.0}) {
    const auto cond = make_condition(PerturbKind::noise, snr);
    const auto noisy = apply(signal, cond, seed);
    checks.push_back(within("residual SNR " + cond.id, residual_snr_db(signal, noisy), snr, 0.1, "dB"));
  }

  for (double fc : {8000.0, 4000.0, 1000.0}) {
    const int rate = 4.0 * fc < fs ? fs : 44100;
    const auto at = tone(fc, 1.0, rate);
    checks.push_back(within("lowpass gain at cutoff " + std::to_string(int(fc)) + " Hz",
                            sine_gain_db(at, lowpass(at, fc)), -3.01, 0.2, "dB"));
    const auto above = tone(2.0 * fc, 1.0, rate);
    checks.push_back(at_least("lowpass attenuation at 2x " + std::to_string(int(fc)) + " Hz",
                              -sine_gain_db(above, lowpass(above, fc)), 11.0, "dB"));
  }

  for (double rt60 : {0.25, 0.5, 1.0}) {
    const auto ir = reverb_impulse_response(rt60, fs, stream_key(seed, "ir", "verify"));
    checks.push_back(within("reverb envelope -60 dB time, rt60 " + std::to_string(rt60).substr(0, 4) + " s",
                            fitted_rt60(ir, fs, rt60), rt60, 0.1 * rt60, "s"));
  }

  const AudioClip five = test_signal(5.0, fs);
  for (double factor : {0.9, 1.1}) {
    const auto out = time_stretch(five, factor);
    const double expected = five.samples.size() / factor;
    checks.push_back(within("stretch duration " + std::to_string(factor).substr(0, 3) + "x",
                            double(out.samples.size()), expected, 256.0, "samples"));
  }
  for (double chunk_ms : {1000.0, 250.0}) {
    const auto out = apply(five, make_condition(PerturbKind::shuffle, chunk_ms), seed);
    const std::size_t chunk = static_cast<std::size_t>(std::llround(chunk_ms * fs / 1000.0));
    const std::size_t full = five.samples.size() / chunk;
    const std::size_t pieces = full + (five.samples.size() % chunk >= std::size_t(kCrossfadeSeconds * fs) ? 1 : 0);
    const double expected = double(five.samples.size()) - double(pieces - 1) * kCrossfadeSeconds * fs;
    checks.push_back(within("shuffle duration " + std::to_string(int(chunk_ms)) + " ms",
                            double(out.samples.size()), expected, 1.0, "samples"));
  }

  {
    const auto twice = reverse(reverse(five));
    const bool exact = twice.samples == five.samples;
    checks.push_back({"reverse involution (bit-exact)", exact ? 0.0 : 1.0, 0.0, 0.0, exact, "mismatch"});
  }

  {
    AudioClip flat{"flat", std::vector<float>(2 * fs, 0.5f), fs};
    const auto out = apply(flat, make_condition(PerturbKind::shuffle, 100.0), seed);
    double worst = 0.0;
    for (float v : out.samples) worst = std::max(worst, std::abs(v / 0.5 - 1.0));
    checks.push_back({"shuffle of constant input, max deviation", worst, 0.0, 0.01, worst <= 0.01, "ratio"});
  }

  {
    const auto full_scale = tone(997.0, 5.0, 48000, 1.0);
    checks.push_back(within("997 Hz full-scale tone loudness", measure_lufs(full_scale), -3.01, 0.1, "LUFS"));
    const auto normalized = normalize_lufs(signal, kTargetLufs).first;
    checks.push_back(within("normalized loudness", measure_lufs(normalized), kTargetLufs, 0.2, "LUFS"));
  }
  return checks;
}

}  // namespace fadprof::verify
