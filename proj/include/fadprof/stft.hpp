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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "fadprof/dsp.hpp"
#include "fadprof/error.hpp"
#include "fadprof/fft.hpp"

namespace fadprof::stft {

/// Shared STFT geometry for every framed transform and the builtin encoders.
inline constexpr std::size_t kWindow = 1024;
inline constexpr std::size_t kHop = 256;

// Samples where the accumulated window power falls below this are the first
// few milliseconds of the output; they are attenuated rather than amplified.
inline constexpr double kWindowPowerFloor = 1e-4;

inline void require_frame(std::size_t length) {
  if (length < kWindow) throw Error("clip too short for STFT");
}

/// Weighted overlap-add with per-sample window-power normalization.
class OverlapAdd {
 public:
  OverlapAdd(std::size_t length, const std::vector<double>& window)
      : window_(window), out_(length + window.size(), 0.0), power_(length + window.size(), 0.0),
        length_(length) {}

  void add(std::span<const double> frame, std::size_t position) {
    for (std::size_t i = 0; i < frame.size() && position + i < out_.size(); ++i) {
      out_[position + i] += frame[i] * window_[i];
      power_[position + i] += window_[i] * window_[i];
    }
  }

  std::vector<double> finish() const {
    std::vector<double> y(length_);
    for (std::size_t n = 0; n < length_; ++n) y[n] = out_[n] / std::max(power_[n], kWindowPowerFloor);
    return y;
  }

 private:
  const std::vector<double>& window_;
  std::vector<double> out_;
  std::vector<double> power_;
  std::size_t length_;
};

inline void load_frame(std::span<const double> x, std::size_t start, const std::vector<double>& window,
                       std::vector<double>& frame) {
  for (std::size_t i = 0; i < window.size(); ++i) {
    const std::size_t n = start + i;
    frame[i] = n < x.size() ? x[n] * window[i] : 0.0;
  }
}

/// Number of hop-spaced frames needed so every sample in [0, length) lies
/// under at least one full frame start at or before it.
inline std::size_t frames_covering(std::size_t length) {
  return length == 0 ? 0 : (length - 1) / kHop + 1;
}

/// Phase-vocoder time scaling. rate is a playback-rate multiplier: the output
/// holds round(len / rate) samples, pitch unchanged. Analysis frames advance
/// by hop * rate (rounded per frame), synthesis frames by hop, and each bin's
/// phase is propagated from its measured instantaneous frequency.
inline std::vector<double> time_scale(std::span<const double> x, double rate) {
  require_frame(x.size());
  if (!(rate > 0.0)) throw Error("time-scale rate must be positive");
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) / rate));
  const auto window = dsp::hann(kWindow);
  const std::size_t bins = kWindow / 2 + 1;

  RealFft fft(kWindow);
  OverlapAdd ola(out_len, window);
  std::vector<double> frame(kWindow), synth(kWindow);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> prev_phase(bins), out_phase(bins);

  const std::size_t frames = frames_covering(out_len);
  std::int64_t prev_pos = 0;
  for (std::size_t k = 0; k < frames; ++k) {
    const auto pos = static_cast<std::int64_t>(
        std::llround(static_cast<double>(k) * static_cast<double>(kHop) * rate));
    load_frame(x, static_cast<std::size_t>(pos), window, frame);
    fft.forward(frame, spec);
    const double analysis_hop = static_cast<double>(pos - prev_pos);
    for (std::size_t b = 0; b < bins; ++b) {
      const double phase = std::arg(spec[b]);
      if (k == 0) {
        out_phase[b] = phase;
      } else {
        const double omega = 2.0 * std::numbers::pi * static_cast<double>(b) / kWindow;
        const double deviation = dsp::princarg(phase - prev_phase[b] - omega * analysis_hop);
        const double inst = omega + deviation / analysis_hop;
        out_phase[b] = dsp::princarg(out_phase[b] + inst * static_cast<double>(kHop));
      }
      prev_phase[b] = phase;
      spec[b] = std::polar(std::abs(spec[b]), out_phase[b]);
    }
    fft.inverse(spec, synth);
    ola.add(synth, k * kHop);
    prev_pos = pos;
  }
  return ola.finish();
}

/// Frame-synchronous analysis/modification/resynthesis (analysis hop equals
/// synthesis hop). modify receives each frame's half spectrum in place.
template <typename Modify>
std::vector<double> process_frames(std::span<const double> x, Modify&& modify) {
  require_frame(x.size());
  const auto window = dsp::hann(kWindow);
  RealFft fft(kWindow);
  OverlapAdd ola(x.size(), window);
  std::vector<double> frame(kWindow), synth(kWindow);
  std::vector<std::complex<double>> spec(fft.bins());
  const std::size_t frames = frames_covering(x.size());
  for (std::size_t k = 0; k < frames; ++k) {
    load_frame(x, k * kHop, window, frame);
    fft.forward(frame, spec);
    modify(spec);
    fft.inverse(spec, synth);
    ola.add(synth, k * kHop);
  }
  return ola.finish();
}

/// Power spectrogram over full frames only (frames never run past the end).
inline std::vector<std::vector<double>> power_frames(std::span<const double> x) {
  std::vector<std::vector<double>> out;
  if (x.size() < kWindow) return out;
  const auto window = dsp::hann(kWindow);
  RealFft fft(kWindow);
  std::vector<double> frame(kWindow);
  std::vector<std::complex<double>> spec(fft.bins());
  for (std::size_t start = 0; start + kWindow <= x.size(); start += kHop) {
    load_frame(x, start, window, frame);
    fft.forward(frame, spec);
    std::vector<double> p(spec.size());
    for (std::size_t b = 0; b < spec.size(); ++b) p[b] = std::norm(spec[b]);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace fadprof::stft
