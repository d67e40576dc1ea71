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

#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/dsp.hpp"
#include "fadprof/error.hpp"

namespace fadprof {

inline constexpr double kTargetLufs = -23.0;

struct LoudnessReport {
  double integrated_lufs = 0.0;  ///< measured after gain
  double gain_applied_db = 0.0;
};

/// K-weighting pre-filter (high shelf + RLB high-pass) designed from its
/// analog prototype, so any sample rate gets the BS.1770 response.
inline std::array<dsp::Biquad, 2> k_weighting(double fs) {
  std::array<dsp::Biquad, 2> stages;
  {
    const double f0 = 1681.974450955533;
    const double gain_db = 3.999843853973347;
    const double q = 0.7071752369554196;
    const double k = std::tan(std::numbers::pi * f0 / fs);
    const double vh = std::pow(10.0, gain_db / 20.0);
    const double vb = std::pow(vh, 0.4996667741545416);
    const double a0 = 1.0 + k / q + k * k;
    auto& s = stages[0];
    s.b0 = (vh + vb * k / q + k * k) / a0;
    s.b1 = 2.0 * (k * k - vh) / a0;
    s.b2 = (vh - vb * k / q + k * k) / a0;
    s.a1 = 2.0 * (k * k - 1.0) / a0;
    s.a2 = (1.0 - k / q + k * k) / a0;
  }
  {
    const double f0 = 38.13547087602444;
    const double q = 0.5003270373238773;
    const double k = std::tan(std::numbers::pi * f0 / fs);
    const double a0 = 1.0 + k / q + k * k;
    auto& s = stages[1];
    s.b0 = 1.0;
    s.b1 = -2.0;
    s.b2 = 1.0;
    s.a1 = 2.0 * (k * k - 1.0) / a0;
    s.a2 = (1.0 - k / q + k * k) / a0;
  }
  return stages;
}

/// Mean-square energy of each 400 ms gating block (75 % overlap) after
/// K-weighting. Mono channel weight is 1.
inline std::vector<double> gating_block_energies(const AudioClip& clip) {
  validate_clip(clip);
  const double fs = clip.sample_rate;
  const auto block = static_cast<std::size_t>(std::llround(0.4 * fs));
  const auto step = static_cast<std::size_t>(std::llround(0.1 * fs));
  if (clip.samples.size() < block) throw Error("clip '" + clip.id + "' too short to gate");

  const auto stages = k_weighting(fs);
  auto x = to_double(clip.samples);
  for (const auto& s : stages) x = s.filter(x);

  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];

  std::vector<double> energies;
  for (std::size_t start = 0; start + block <= x.size(); start += step) {
    energies.push_back((prefix[start + block] - prefix[start]) / static_cast<double>(block));
  }
  return energies;
}

/// Integrated loudness with the -70 LUFS absolute and -10 LU relative gates.
inline double measure_lufs(const AudioClip& clip) {
  const auto energies = gating_block_energies(clip);
  auto loudness = [](double z) { return -0.691 + 10.0 * std::log10(z); };

  double sum = 0.0;
  std::size_t count = 0;
  for (double z : energies) {
    if (z > 0.0 && loudness(z) > -70.0) {
      sum += z;
      ++count;
    }
  }
  if (count == 0) throw Error("clip '" + clip.id + "' loudness immeasurable (silence)");
  const double relative_gate = loudness(sum / static_cast<double>(count)) - 10.0;

  sum = 0.0;
  count = 0;
  for (double z : energies) {
    if (z > 0.0 && loudness(z) > -70.0 && loudness(z) > relative_gate) {
      sum += z;
      ++count;
    }
  }
  if (count == 0) throw Error("clip '" + clip.id + "' loudness immeasurable (silence)");
  return loudness(sum / static_cast<double>(count));
}

inline AudioClip apply_gain_db(const AudioClip& clip, double gain_db) {
  AudioClip out = clip;
  const double g = dsp::db_to_gain(gain_db);
  for (float& s : out.samples) s = static_cast<float>(static_cast<double>(s) * g);
  return out;
}

/// Pure gain to the target loudness; no limiting, no clipping. A second
/// measurement corrects the rare case where the absolute gate admits a
/// different block set after the gain change.
inline std::pair<AudioClip, LoudnessReport> normalize_lufs(const AudioClip& clip,
                                                          double target = kTargetLufs) {
  const double measured = measure_lufs(clip);
  double gain_db = target - measured;
  AudioClip out = apply_gain_db(clip, gain_db);
  double after = measure_lufs(out);
  if (std::abs(after - target) > 0.01) {
    gain_db += target - after;
    out = apply_gain_db(clip, gain_db);
    after = measure_lufs(out);
  }
  return {std::move(out), LoudnessReport{after, gain_db}};
}

}  // namespace fadprof
