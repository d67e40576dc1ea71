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
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/random.hpp"

namespace fadprof::synth {

struct CorpusOptions {
  std::size_t count = 200;
  double seconds = 3.0;
  int sample_rate = 16000;
  std::uint64_t seed = 1;
};

/// One harmonic clip with a clip-specific timbre held constant over time and
/// a smooth single-peak amplitude envelope. Spectrum is stationary, the
/// envelope is not.
inline AudioClip envelope_clip(const CorpusOptions& opt, std::size_t index) {
  char id[32];
  std::snprintf(id, sizeof id, "clip_%04zu", index);
  KeyedStream rng(Hasher{}.add("synth-v1").add(opt.seed).add(std::uint64_t(index)).value());

  const double f0 = 110.0 * std::pow(2.0, 2.0 * rng.uniform());  // 110..440 Hz
  const int harmonics = 4 + static_cast<int>(rng.below(6));
  const double tilt = 0.5 + rng.uniform();
  const double noise_level = 0.02 + 0.05 * rng.uniform();
  const double peak = 0.25 + 0.5 * rng.uniform();
  const double sharpness = 1.5 + 2.0 * rng.uniform();
  const double ripple_rate = 2.0 + 3.0 * rng.uniform();
  const double ripple_depth = 0.15 * rng.uniform();

  std::vector<double> phase(harmonics), amp(harmonics);
  for (int h = 0; h < harmonics; ++h) {
    phase[h] = 2.0 * std::numbers::pi * rng.uniform();
    amp[h] = std::pow(h + 1.0, -tilt);
  }

  const auto n = static_cast<std::size_t>(std::llround(opt.seconds * opt.sample_rate));
  AudioClip clip{id, std::vector<float>(n), opt.sample_rate};
  const double nyquist = 0.5 * opt.sample_rate;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i) / opt.sample_rate;
    const double u = double(i) / double(n);
    // Skewed bump: rises to its maximum at `peak`, zero at both ends.
    const double x = u < peak ? u / peak : (1.0 - u) / (1.0 - peak);
    const double env = std::pow(std::sin(0.5 * std::numbers::pi * x), sharpness) *
                       (1.0 - ripple_depth + ripple_depth * std::cos(2.0 * std::numbers::pi * ripple_rate * t));
    double s = 0.0;
    for (int h = 0; h < harmonics; ++h) {
      const double f = f0 * (h + 1);
      if (f >= nyquist) break;
      s += amp[h] * std::sin(2.0 * std::numbers::pi * f * t + phase[h]);
    }
    s += noise_level * rng.normal();
    clip.samples[i] = static_cast<float>(0.3 * env * s);
  }
  return clip;
}

inline std::vector<AudioClip> envelope_corpus(const CorpusOptions& opt) {
  std::vector<AudioClip> clips;
  clips.reserve(opt.count);
  for (std::size_t i = 0; i < opt.count; ++i) clips.push_back(envelope_clip(opt, i));
  return clips;
}

inline void write_corpus(const fs::path& dir, const std::vector<AudioClip>& clips) {
  for (const auto& c : clips) write_wav(dir / (c.id + ".wav"), c);
}

}  // namespace fadprof::synth
