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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/condition.hpp"
#include "fadprof/dsp.hpp"
#include "fadprof/error.hpp"
#include "fadprof/fft.hpp"
#include "fadprof/random.hpp"
#include "fadprof/resample.hpp"
#include "fadprof/stft.hpp"

namespace fadprof {

inline constexpr double kCrossfadeSeconds = 0.010;

namespace perturb_detail {

inline AudioClip with_samples(const AudioClip& like, std::span<const double> samples) {
  AudioClip out;
  out.id = like.id;
  out.sample_rate = like.sample_rate;
  out.samples = to_float(samples);
  return out;
}

}  // namespace perturb_detail

/// Additive white Gaussian noise at an exact full-clip SNR: the drawn noise is
/// rescaled so its own mean square hits P_signal / 10^(snr/10).
inline AudioClip add_noise(const AudioClip& clip, double snr_db, std::uint64_t key) {
  validate_clip(clip);
  const auto x = to_double(clip.samples);
  const double p_signal = dsp::mean_square<double>(x);
  if (!(p_signal > 0.0)) throw Error("clip '" + clip.id + "': SNR undefined for silence");

  KeyedStream rng(key);
  std::vector<double> noise(x.size());
  for (double& v : noise) v = rng.normal();
  const double p_noise = dsp::mean_square<double>(noise);
  const double scale = std::sqrt(p_signal / std::pow(10.0, snr_db / 10.0) / p_noise);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + scale * noise[i];
  return perturb_detail::with_samples(clip, y);
}

/// Single causal RBJ low-pass biquad, Q = 1/sqrt(2). Cutoffs at or above
/// Nyquist leave the clip untouched.
inline AudioClip lowpass(const AudioClip& clip, double cutoff_hz) {
  validate_clip(clip);
  if (cutoff_hz >= 0.5 * clip.sample_rate) return clip;
  if (cutoff_hz <= 0.0) throw Error("lowpass cutoff must be positive");
  const auto filter = dsp::rbj_lowpass(cutoff_hz, clip.sample_rate);
  return perturb_detail::with_samples(clip, filter.filter(to_double(clip.samples)));
}

/// Synthetic room response: a unit direct path followed by a Gaussian-noise
/// tail whose amplitude envelope falls 60 dB at rt60. The tail spans
/// 1.5 * rt60 and carries the same energy as the direct path.
inline std::vector<double> reverb_impulse_response(double rt60_s, int sample_rate, std::uint64_t key) {
  if (!(rt60_s > 0.0)) throw Error("rt60 must be positive");
  const auto tail = static_cast<std::size_t>(std::floor(1.5 * rt60_s * sample_rate));
  std::vector<double> ir(tail + 1, 0.0);
  ir[0] = 1.0;
  if (tail == 0) return ir;

  KeyedStream rng(key);
  // 20*log10(env(t)) = -60 t / rt60
  const double decay = 3.0 * std::numbers::ln10 / (rt60_s * sample_rate);
  double energy = 0.0;
  for (std::size_t n = 1; n <= tail; ++n) {
    ir[n] = rng.normal() * std::exp(-decay * static_cast<double>(n));
    energy += ir[n] * ir[n];
  }
  const double scale = energy > 0.0 ? 1.0 / std::sqrt(energy) : 0.0;
  for (std::size_t n = 1; n <= tail; ++n) ir[n] *= scale;
  return ir;
}

/// Convolution with the synthetic IR, truncated to the input length and
/// rescaled to the input RMS.
inline AudioClip reverb(const AudioClip& clip, double rt60_s, std::uint64_t key) {
  validate_clip(clip);
  const auto x = to_double(clip.samples);
  const auto ir = reverb_impulse_response(rt60_s, clip.sample_rate, key);
  auto y = ir.size() == 1 ? x : fft_convolve(x, ir, x.size());
  const double in_rms = dsp::rms<double>(x);
  const double out_rms = dsp::rms<double>(y);
  if (out_rms > 0.0) {
    const double g = in_rms / out_rms;
    for (double& v : y) v *= g;
  }
  return perturb_detail::with_samples(clip, y);
}

/// Tempo change with pitch preserved. factor is a playback-rate multiplier:
/// 1.1 plays faster and yields len / 1.1 samples.
inline AudioClip time_stretch(const AudioClip& clip, double factor) {
  validate_clip(clip);
  if (!(factor >= 0.5 && factor <= 2.0)) throw Error("stretch factor must lie in [0.5, 2]");
  if (clip.samples.size() < stft::kWindow) throw Error("clip '" + clip.id + "' too short for STFT");
  return perturb_detail::with_samples(clip, stft::time_scale(to_double(clip.samples), factor));
}

/// Duration-preserving pitch shift: phase-vocoder stretch by 2^(st/12), then
/// band-limited resampling back to the original length.
inline AudioClip pitch_shift(const AudioClip& clip, double semitones) {
  validate_clip(clip);
  if (!(std::abs(semitones) <= 12.0)) throw Error("pitch shift limited to +/-12 semitones");
  if (clip.samples.size() < stft::kWindow) throw Error("clip '" + clip.id + "' too short for STFT");
  const double ratio = std::exp2(semitones / 12.0);
  const auto x = to_double(clip.samples);
  auto stretched = stft::time_scale(x, 1.0 / ratio);
  if (ratio == 1.0) return perturb_detail::with_samples(clip, stretched);
  return perturb_detail::with_samples(clip, resample_by_step(stretched, ratio, x.size()));
}

/// Cepstral lifter length: 40 coefficients at 16 kHz, proportional elsewhere.
inline std::size_t formant_lifter(int sample_rate) {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(40.0 * sample_rate / 16000.0)));
}

/// Smooth natural-log magnitude envelope of one half spectrum. Plain
/// cepstral liftering averages the valleys between harmonics into the
/// envelope and flattens it, so the liftered curve is iterated against
/// max(log spectrum, previous envelope) until it rides on the spectral peaks.
inline constexpr int kEnvelopeIterations = 24;
inline constexpr double kEnvelopeTolerance = 0.23;  // ~2 dB in natural log

inline std::vector<double> cepstral_envelope(std::span<const std::complex<double>> spec,
                                             std::size_t lifter, RealFft& fft) {
  const std::size_t n = fft.size();
  std::vector<double> target(spec.size());
  for (std::size_t b = 0; b < spec.size(); ++b) target[b] = std::log(std::max(std::abs(spec[b]), 1e-12));

  std::vector<std::complex<double>> buf(spec.size());
  std::vector<double> cep(n);
  std::vector<double> env(spec.size());
  auto smooth = [&](const std::vector<double>& log_mag) {
    for (std::size_t b = 0; b < buf.size(); ++b) buf[b] = log_mag[b];
    fft.inverse(buf, cep);
    for (std::size_t q = lifter; q + lifter <= n; ++q) cep[q] = 0.0;
    fft.forward(cep, buf);
    for (std::size_t b = 0; b < env.size(); ++b) env[b] = buf[b].real();
  };

  smooth(target);
  for (int it = 0; it < kEnvelopeIterations; ++it) {
    double worst = 0.0;
    for (std::size_t b = 0; b < target.size(); ++b) {
      worst = std::max(worst, target[b] - env[b]);
      target[b] = std::max(target[b], env[b]);
    }
    if (worst < kEnvelopeTolerance) break;
    smooth(target);
  }
  return env;
}

/// Warps the spectral envelope along frequency by factor (a peak at f moves to
/// f * factor) while the envelope-flattened fine structure, and with it F0,
/// stays put. Magnitudes only; analysis phases are reused.
inline AudioClip formant_shift(const AudioClip& clip, double factor) {
  validate_clip(clip);
  if (!(factor >= 0.7 && factor <= 1.5)) throw Error("formant factor must lie in [0.7, 1.5]");
  if (clip.samples.size() < stft::kWindow) throw Error("clip '" + clip.id + "' too short for STFT");
  const std::size_t lifter = formant_lifter(clip.sample_rate);
  RealFft cep_fft(stft::kWindow);
  const auto y = stft::process_frames(to_double(clip.samples), [&](std::vector<std::complex<double>>& spec) {
    const auto env = cepstral_envelope(spec, lifter, cep_fft);
    const std::size_t last = env.size() - 1;
    for (std::size_t b = 0; b < spec.size(); ++b) {
      const double src = std::min(static_cast<double>(b) / factor, static_cast<double>(last));
      const auto i = static_cast<std::size_t>(src);
      const double frac = src - static_cast<double>(i);
      const double warped = i < last ? env[i] + frac * (env[i + 1] - env[i]) : env[last];
      const double mag = std::abs(spec[b]);
      if (mag == 0.0) continue;
      spec[b] *= std::exp(warped - env[b]);
    }
  });
  return perturb_detail::with_samples(clip, y);
}

inline AudioClip reverse(const AudioClip& clip) {
  AudioClip out = clip;
  std::reverse(out.samples.begin(), out.samples.end());
  return out;
}

/// Uniform non-identity permutation of [0, n) drawn from the keyed stream.
inline std::vector<std::size_t> keyed_permutation(std::size_t n, std::uint64_t key) {
  std::vector<std::size_t> perm(n);
  KeyedStream rng(key);
  for (;;) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(perm[i - 1], perm[j]);
    }
    bool identity = true;
    for (std::size_t i = 0; i < n && identity; ++i) identity = perm[i] == i;
    if (!identity || n < 2) return perm;
  }
}

/// Splits into consecutive chunk_ms pieces, permutes the full chunks (the
/// partial remainder stays last) and splices neighbours with 10 ms
/// raised-cosine crossfades (cos^2 / sin^2 gains, which sum to one). Each
/// crossfaded join shortens the clip by one crossfade. A remainder shorter
/// than the crossfade is appended without overlap.
inline AudioClip shuffle_chunks(const AudioClip& clip, double chunk_ms, std::uint64_t key) {
  validate_clip(clip);
  if (!(chunk_ms > 0.0)) throw Error("shuffle chunk must be positive");
  const auto chunk = static_cast<std::size_t>(std::llround(chunk_ms * clip.sample_rate / 1000.0));
  const auto fade = static_cast<std::size_t>(std::llround(kCrossfadeSeconds * clip.sample_rate));
  const std::size_t len = clip.samples.size();
  const std::size_t full = chunk == 0 ? 0 : len / chunk;
  if (full < 2) throw Error("clip '" + clip.id + "' too short to shuffle");
  if (chunk < 2 * fade) throw Error("shuffle chunk shorter than two crossfades");

  const auto order = keyed_permutation(full, key);
  std::vector<std::span<const float>> pieces;
  for (std::size_t idx : order) pieces.emplace_back(clip.samples.data() + idx * chunk, chunk);
  const std::size_t tail = len - full * chunk;

  std::vector<double> out;
  out.reserve(len);
  auto splice = [&](std::span<const float> piece, std::size_t overlap) {
    const std::size_t base = out.size() - overlap;
    for (std::size_t i = 0; i < overlap; ++i) {
      const double theta = 0.5 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(overlap);
      const double c = std::cos(theta), s = std::sin(theta);
      out[base + i] = out[base + i] * c * c + static_cast<double>(piece[i]) * s * s;
    }
    for (std::size_t i = overlap; i < piece.size(); ++i) out.push_back(piece[i]);
  };
  out.assign(pieces[0].begin(), pieces[0].end());
  for (std::size_t p = 1; p < pieces.size(); ++p) splice(pieces[p], fade);
  if (tail > 0) {
    std::span<const float> rest(clip.samples.data() + full * chunk, tail);
    splice(rest, tail >= fade ? fade : 0);
  }
  return perturb_detail::with_samples(clip, out);
}

/// Runs one condition. Output id is "<clip_id>__<condition_id>"; all
/// randomness is keyed by (seed, clip id, condition id).
inline AudioClip apply(const AudioClip& clip, const Condition& condition, std::uint64_t seed) {
  const std::uint64_t key = stream_key(seed, clip.id, condition.id);
  AudioClip out;
  switch (condition.kind) {
    case PerturbKind::noise: out = add_noise(clip, condition.param, key); break;
    case PerturbKind::lowpass: out = lowpass(clip, condition.param); break;
    case PerturbKind::reverb: out = reverb(clip, condition.param, key); break;
    case PerturbKind::pitch: out = pitch_shift(clip, condition.param); break;
    case PerturbKind::stretch: out = time_stretch(clip, condition.param); break;
    case PerturbKind::formant: out = formant_shift(clip, condition.param); break;
    case PerturbKind::reverse: out = reverse(clip); break;
    case PerturbKind::shuffle: out = shuffle_chunks(clip, condition.param, key); break;
  }
  out.id = clip.id + "__" + condition.id;
  return out;
}

}  // namespace fadprof
