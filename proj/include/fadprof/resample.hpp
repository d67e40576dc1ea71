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
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/error.hpp"

namespace fadprof {

/// Kaiser-windowed sinc kernel, tabulated on a fine grid and linearly
/// interpolated.
class SincKernel {
 public:
  static constexpr double kBeta = 12.0;
  static constexpr double kZeroCrossings = 32.0;
  static constexpr int kMinHalfTaps = 32;  // >= 64 taps per output phase
  static constexpr int kTableDensity = 512;

  /// cutoff in cycles per input sample (< 0.5).
  explicit SincKernel(double cutoff) : cutoff_(cutoff) {
    half_width_ = std::max<double>(kMinHalfTaps, kZeroCrossings / (2.0 * cutoff));
    const auto n = static_cast<std::size_t>(std::ceil(half_width_ * kTableDensity)) + 2;
    table_.resize(n);
    const double i0_beta = std::cyl_bessel_i(0.0, kBeta);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / kTableDensity;
      table_[i] = eval_exact(t, i0_beta);
    }
  }

  double half_width() const { return half_width_; }

  double operator()(double t) const {
    t = std::abs(t);
    return t >= half_width_ ? 0.0 : at_distance(t);
  }

  /// Unchecked lookup for 0 <= t <= half_width().
  double at_distance(double t) const {
    const double pos = t * kTableDensity;
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

 private:
  double eval_exact(double t, double i0_beta) const {
    if (t >= half_width_) return 0.0;
    const double arg = 2.0 * cutoff_ * t;
    const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = t / half_width_;
    const double window = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    return 2.0 * cutoff_ * sinc * window;
  }

  double cutoff_;
  double half_width_;
  std::vector<double> table_;
};

/// Kernels are costly to tabulate and few cutoffs recur (one per rate pair or
/// pitch ratio), so they are built once and shared.
inline std::shared_ptr<const SincKernel> shared_kernel(double cutoff) {
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const SincKernel>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[cutoff];
  if (!slot) slot = std::make_shared<const SincKernel>(cutoff);
  return slot;
}

/// Band-limited interpolation of x at positions n * step (input samples per
/// output sample), n in [0, out_len). Samples outside x are zero. The
/// anti-aliasing cutoff sits at 0.45 of the lower of the two rates.
inline std::vector<double> resample_by_step(std::span<const double> x, double step,
                                            std::size_t out_len) {
  if (!(step > 0.0)) throw Error("resample step must be positive");
  const double cutoff = 0.45 * std::min(1.0, 1.0 / step);
  const auto shared = shared_kernel(cutoff);
  const SincKernel& kernel = *shared;
  const double hw = kernel.half_width();
  const auto len = static_cast<std::int64_t>(x.size());

  std::vector<double> y(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) * step;
    const auto first = static_cast<std::int64_t>(std::ceil(t - hw));
    const auto last = static_cast<std::int64_t>(std::floor(t + hw));
    double acc = 0.0;
    double norm = 0.0;
    for (std::int64_t k = first; k <= last; ++k) {
      const double h = kernel.at_distance(std::abs(t - static_cast<double>(k)));
      norm += h;
      if (k >= 0 && k < len) acc += h * x[static_cast<std::size_t>(k)];
    }
    y[n] = norm != 0.0 ? acc / norm : 0.0;
  }
  return y;
}

/// Resamples to target_rate preserving duration to within one output sample.
/// Matching rates pass through bit-exactly.
inline AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw Error("target sample rate must be positive");
  validate_clip(clip);
  if (target_rate == clip.sample_rate) return clip;

  const auto in_rate = static_cast<std::uint64_t>(clip.sample_rate);
  const auto out_rate = static_cast<std::uint64_t>(target_rate);
  const std::uint64_t n_in = clip.samples.size();
  const std::uint64_t out_len = (n_in * out_rate + in_rate / 2) / in_rate;

  const auto x = to_double(clip.samples);
  const double step = static_cast<double>(in_rate) / static_cast<double>(out_rate);
  AudioClip out;
  out.id = clip.id;
  out.sample_rate = target_rate;
  out.samples = to_float(resample_by_step(x, step, static_cast<std::size_t>(std::max<std::uint64_t>(out_len, 1))));
  return out;
}

}  // namespace fadprof
