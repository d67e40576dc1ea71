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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/embedding.hpp"
#include "fadprof/error.hpp"
#include "fadprof/log.hpp"
#include "fadprof/parallel.hpp"
#include "fadprof/resample.hpp"
#include "fadprof/stft.hpp"

namespace fadprof {

// Reference encoders with known invariances. melstats averages a log-mel
// spectrogram over time and therefore cannot see frame order; envseq keeps
// only the normalized energy contour and therefore sees little else.

inline constexpr int kMelBands = 64;
inline constexpr int kContourPoints = 32;
inline constexpr int kBuiltinRate = 16000;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters evenly spaced on the mel scale from 0 to Nyquist;
/// weights[band][bin].
inline std::vector<std::vector<double>> mel_filterbank(int bands, std::size_t fft_size, int sample_rate) {
  const std::size_t bins = fft_size / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(bands) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(bands + 1));
  }
  std::vector<std::vector<double>> fb(static_cast<std::size_t>(bands), std::vector<double>(bins, 0.0));
  for (int m = 0; m < bands; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / static_cast<double>(fft_size);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb[static_cast<std::size_t>(m)][b] = w;
    }
  }
  return fb;
}

/// Temporal mean of log(1 + mel power) over full STFT frames.
inline std::vector<double> melstats_embedding(std::span<const double> x, int sample_rate) {
  const auto frames = stft::power_frames(x);
  if (frames.empty()) throw Error("clip too short for STFT");
  const auto fb = mel_filterbank(kMelBands, stft::kWindow, sample_rate);
  // Each triangle covers a short run of bins; only that run is summed.
  std::vector<std::pair<std::size_t, std::size_t>> support(kMelBands);
  for (std::size_t m = 0; m < support.size(); ++m) {
    const auto& w = fb[m];
    const auto first = std::find_if(w.begin(), w.end(), [](double v) { return v != 0.0; });
    const auto last = std::find_if(w.rbegin(), w.rend(), [](double v) { return v != 0.0; }).base();
    support[m] = first < last ? std::pair(std::size_t(first - w.begin()), std::size_t(last - w.begin()))
                              : std::pair(std::size_t{0}, std::size_t{0});
  }
  std::vector<double> mean(kMelBands, 0.0);
  for (const auto& p : frames) {
    for (int m = 0; m < kMelBands; ++m) {
      const auto& w = fb[static_cast<std::size_t>(m)];
      const auto [lo, hi] = support[static_cast<std::size_t>(m)];
      double e = 0.0;
      for (std::size_t b = lo; b < hi; ++b) e += w[b] * p[b];
      mean[static_cast<std::size_t>(m)] += std::log1p(e);
    }
  }
  for (double& v : mean) v /= static_cast<double>(frames.size());
  return mean;
}

/// Per-frame energy contour (same 1024/256 framing), linearly resampled to 32
/// points and divided by its maximum.
inline std::vector<double> envseq_embedding(std::span<const double> x) {
  stft::require_frame(x.size());
  std::vector<double> energy;
  for (std::size_t start = 0; start + stft::kWindow <= x.size(); start += stft::kHop) {
    double e = 0.0;
    for (std::size_t i = 0; i < stft::kWindow; ++i) e += x[start + i] * x[start + i];
    energy.push_back(e);
  }
  std::vector<double> contour(kContourPoints);
  const double span = static_cast<double>(energy.size() - 1);
  for (int j = 0; j < kContourPoints; ++j) {
    const double pos = span * j / (kContourPoints - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    contour[static_cast<std::size_t>(j)] =
        i + 1 < energy.size() ? energy[i] + frac * (energy[i + 1] - energy[i]) : energy.back();
  }
  const double peak = *std::max_element(contour.begin(), contour.end());
  if (peak > 0.0) {
    for (double& v : contour) v /= peak;
  }
  return contour;
}

inline bool is_builtin_encoder(std::string_view id) { return id == "melstats" || id == "envseq"; }

inline EncoderSpec builtin_encoder_spec(std::string_view id) {
  if (id == "melstats") return {"melstats", kBuiltinRate, kMelBands, {EncoderSource::Type::builtin, "melstats"}};
  if (id == "envseq") return {"envseq", kBuiltinRate, kContourPoints, {EncoderSource::Type::builtin, "envseq"}};
  throw Error("unknown builtin encoder '" + std::string(id) + "'");
}

/// Embeds clips with a builtin encoder after resampling to its native rate.
/// Clips shorter than one STFT window are skipped with a warning.
inline EmbeddingSet embed_builtin(const EncoderSpec& spec, std::span<const AudioClip> clips,
                                  unsigned workers = 1) {
  const std::string& which = spec.source.target;
  if (!is_builtin_encoder(which)) throw Error("unknown builtin encoder '" + which + "'");
  const int dim = which == "melstats" ? kMelBands : kContourPoints;
  if (spec.dim != dim) throw Error("encoder dim mismatch: builtin '" + which + "' is " + std::to_string(dim) + "-dim");

  std::vector<std::optional<std::vector<double>>> rows(clips.size());
  parallel_for(clips.size(), workers, [&](std::size_t i) {
    const AudioClip clip = resample(clips[i], spec.native_rate);
    if (clip.samples.size() < stft::kWindow) return;
    const auto x = to_double(clip.samples);
    rows[i] = which == "melstats" ? melstats_embedding(x, clip.sample_rate) : envseq_embedding(x);
  });

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (rows[i]) kept.emplace_back(clips[i].id, i);
    else log::warn("clip '", clips[i].id, "' too short for encoder '", spec.name, "'; excluded");
  }
  if (kept.size() < 2) throw Error("insufficient corpus: " + std::to_string(kept.size()) + " usable clip(s)");
  std::sort(kept.begin(), kept.end());

  EmbeddingSet set;
  set.encoder = spec.name;
  set.matrix.resize(static_cast<Eigen::Index>(kept.size()), dim);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    set.ids.push_back(kept[r].first);
    const auto& row = *rows[kept[r].second];
    for (int c = 0; c < dim; ++c) {
      set.matrix(static_cast<Eigen::Index>(r), c) = static_cast<float>(row[static_cast<std::size_t>(c)]);
    }
  }
  return set;
}

inline EmbeddingSet embed_builtin(std::string_view encoder_id, std::span<const AudioClip> clips,
                                  unsigned workers = 1) {
  return embed_builtin(builtin_encoder_spec(encoder_id), clips, workers);
}

}  // namespace fadprof
