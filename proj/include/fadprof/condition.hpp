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
#include <cstdio>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "fadprof/error.hpp"

namespace fadprof {

enum class PerturbKind { noise, lowpass, reverb, pitch, stretch, formant, reverse, shuffle };
enum class Axis { recall, precision, semantic, structural };

inline constexpr std::array<PerturbKind, 8> kAllKinds = {
    PerturbKind::noise,   PerturbKind::lowpass, PerturbKind::reverb,  PerturbKind::pitch,
    PerturbKind::stretch, PerturbKind::formant, PerturbKind::reverse, PerturbKind::shuffle};

/// Display and report order.
inline constexpr std::array<Axis, 4> kAllAxes = {Axis::recall, Axis::precision, Axis::semantic,
                                                 Axis::structural};

inline std::string_view to_string(PerturbKind k) {
  switch (k) {
    case PerturbKind::noise: return "noise";
    case PerturbKind::lowpass: return "lowpass";
    case PerturbKind::reverb: return "reverb";
    case PerturbKind::pitch: return "pitch";
    case PerturbKind::stretch: return "stretch";
    case PerturbKind::formant: return "formant";
    case PerturbKind::reverse: return "reverse";
    case PerturbKind::shuffle: return "shuffle";
  }
  return "?";
}

inline std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::recall: return "recall";
    case Axis::precision: return "precision";
    case Axis::semantic: return "semantic";
    case Axis::structural: return "structural";
  }
  return "?";
}

inline PerturbKind parse_kind(std::string_view s) {
  for (auto k : kAllKinds) {
    if (to_string(k) == s) return k;
  }
  throw Error("unknown perturbation kind '" + std::string(s) + "'");
}

/// Name of the single parameter each kind carries ("" for reverse).
inline std::string_view param_name(PerturbKind k) {
  switch (k) {
    case PerturbKind::noise: return "snr_db";
    case PerturbKind::lowpass: return "cutoff_hz";
    case PerturbKind::reverb: return "rt60_s";
    case PerturbKind::pitch: return "semitones";
    case PerturbKind::stretch: return "factor";
    case PerturbKind::formant: return "factor";
    case PerturbKind::reverse: return "";
    case PerturbKind::shuffle: return "chunk_ms";
  }
  return "";
}

/// One perturbation of the suite.
struct Condition {
  std::string id;
  PerturbKind kind = PerturbKind::reverse;
  double param = 0.0;
  Axis axis = Axis::structural;

  friend bool operator==(const Condition&, const Condition&) = default;
};

/// Mild pitch moves (up to two semitones) and tempo changes are intra-class
/// variation; larger pitch moves and envelope warps change source identity.
inline Axis axis_for(PerturbKind kind, double param) {
  switch (kind) {
    case PerturbKind::pitch: return std::abs(param) <= 2.0 ? Axis::recall : Axis::semantic;
    case PerturbKind::stretch: return Axis::recall;
    case PerturbKind::noise:
    case PerturbKind::lowpass:
    case PerturbKind::reverb: return Axis::precision;
    case PerturbKind::formant: return Axis::semantic;
    case PerturbKind::reverse:
    case PerturbKind::shuffle: return Axis::structural;
  }
  return Axis::structural;
}

namespace condition_detail {

inline bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

inline std::string integer(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
  return buf;
}

/// One or two decimals: 1.0, 0.25, 0.1.
inline std::string decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s.size() >= 2 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

}  // namespace condition_detail

/// Canonical id: noise_snr_{N}dB, lowpass_{N}hz, reverb_rt60_{X}s,
/// pitch_{+-N}st, stretch_{X}x, formant_{X}x, reverse, shuffle_{N}ms.
inline std::string format_condition_id(PerturbKind kind, double param) {
  using namespace condition_detail;
  auto need_integer = [&] {
    if (!is_integral(param)) {
      throw Error(std::string(to_string(kind)) + " parameter must be an integer");
    }
  };
  auto need_decimal = [&] {
    if (!std::isfinite(param) || param <= 0.0 || std::abs(param * 100 - std::round(param * 100)) > 1e-9) {
      throw Error(std::string(to_string(kind)) + " parameter must be positive with at most two decimals");
    }
  };
  switch (kind) {
    case PerturbKind::noise: need_integer(); return "noise_snr_" + integer(param) + "dB";
    case PerturbKind::lowpass:
      need_integer();
      if (param <= 0) throw Error("lowpass cutoff must be positive");
      return "lowpass_" + integer(param) + "hz";
    case PerturbKind::reverb: need_decimal(); return "reverb_rt60_" + decimal(param) + "s";
    case PerturbKind::pitch:
      need_integer();
      return std::string("pitch_") + (param < 0 ? "" : "+") + integer(param) + "st";
    case PerturbKind::stretch: need_decimal(); return "stretch_" + decimal(param) + "x";
    case PerturbKind::formant: need_decimal(); return "formant_" + decimal(param) + "x";
    case PerturbKind::reverse: return "reverse";
    case PerturbKind::shuffle:
      need_integer();
      if (param <= 0) throw Error("shuffle chunk must be positive");
      return "shuffle_" + integer(param) + "ms";
  }
  throw Error("unreachable");
}

inline Condition make_condition(PerturbKind kind, double param = 0.0) {
  Condition c;
  c.kind = kind;
  c.param = kind == PerturbKind::reverse ? 0.0 : param;
  c.id = format_condition_id(kind, c.param);
  c.axis = axis_for(kind, c.param);
  return c;
}

/// Parses a canonical id. Anything that would not format back to the same
/// string is rejected.
inline Condition parse_condition(std::string_view id) {
  static const std::regex pattern(
      R"(^(?:noise_snr_(-?\d+)dB|lowpass_(\d+)hz|reverb_rt60_(\d+\.\d{1,2})s|pitch_([+-]\d+)st|)"
      R"(stretch_(\d+\.\d{1,2})x|formant_(\d+\.\d{1,2})x|(reverse)|shuffle_(\d+)ms)$)");
  static constexpr PerturbKind group_kind[] = {
      PerturbKind::noise,   PerturbKind::lowpass, PerturbKind::reverb,  PerturbKind::pitch,
      PerturbKind::stretch, PerturbKind::formant, PerturbKind::reverse, PerturbKind::shuffle};
  const std::string text(id);
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw Error("unknown condition id '" + text + "'");
  for (std::size_t g = 1; g < m.size(); ++g) {
    if (!m[g].matched) continue;
    const PerturbKind kind = group_kind[g - 1];
    const double param = kind == PerturbKind::reverse ? 0.0 : std::stod(m[g].str());
    Condition c;
    try {
      c = make_condition(kind, param);
    } catch (const Error&) {
      throw Error("unknown condition id '" + text + "'");
    }
    if (c.id != text) throw Error("non-canonical condition id '" + text + "' (expected '" + c.id + "')");
    return c;
  }
  throw Error("unknown condition id '" + text + "'");
}

/// The fixed 37-condition suite in canonical order.
inline std::vector<Condition> default_grid() {
  std::vector<Condition> grid;
  for (double snr : {60, 40, 20, 10, 0, -5}) grid.push_back(make_condition(PerturbKind::noise, snr));
  for (double hz : {8000, 6000, 4000, 2000, 1000}) grid.push_back(make_condition(PerturbKind::lowpass, hz));
  for (double rt : {0.1, 0.2, 0.25, 0.4, 0.5, 0.6, 0.8, 1.0, 2.0}) {
    grid.push_back(make_condition(PerturbKind::reverb, rt));
  }
  for (double st : {-8, -4, -2, -1, 1, 2, 4, 8}) grid.push_back(make_condition(PerturbKind::pitch, st));
  for (double f : {0.9, 1.1}) grid.push_back(make_condition(PerturbKind::stretch, f));
  for (double f : {1.3, 1.4}) grid.push_back(make_condition(PerturbKind::formant, f));
  grid.push_back(make_condition(PerturbKind::reverse));
  for (double ms : {1000, 500, 250, 100}) grid.push_back(make_condition(PerturbKind::shuffle, ms));
  return grid;
}

inline const Condition* find_condition(const std::vector<Condition>& grid, std::string_view id) {
  for (const auto& c : grid) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

/// Ordering key within a kind: increasing severity for noise and lowpass
/// (falling SNR and cutoff) and for shuffle (shorter chunks), ascending
/// parameter otherwise.
inline double severity_key(const Condition& c) {
  switch (c.kind) {
    case PerturbKind::noise:
    case PerturbKind::lowpass:
    case PerturbKind::shuffle: return -c.param;
    default: return c.param;
  }
}

}  // namespace fadprof
