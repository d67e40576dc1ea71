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
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fadprof/condition.hpp"
#include "fadprof/error.hpp"
#include "fadprof/fad.hpp"

namespace fadprof {

enum class NormalizationPolicy { max, p95 };

inline std::string_view to_string(NormalizationPolicy p) { return p == NormalizationPolicy::max ? "max" : "p95"; }

inline NormalizationPolicy parse_policy(std::string_view s) {
  if (s == "max") return NormalizationPolicy::max;
  if (s == "p95") return NormalizationPolicy::p95;
  throw Error("unknown normalization policy '" + std::string(s) + "' (expected max or p95)");
}

/// Per-encoder reference for log-scale normalization.
struct NormalizationContext {
  std::string encoder;
  double fad_max = 0.0;
  NormalizationPolicy policy = NormalizationPolicy::max;
  /// condition id -> dataset -> raw FAD
  std::map<std::string, std::map<std::string, double>> per_condition_fads;

  std::vector<std::string> datasets() const {
    std::set<std::string> names;
    for (const auto& [cond, by_ds] : per_condition_fads) {
      for (const auto& [ds, v] : by_ds) names.insert(ds);
    }
    return {names.begin(), names.end()};
  }

  double raw(const std::string& condition, const std::string& dataset) const {
    const auto c = per_condition_fads.find(condition);
    if (c == per_condition_fads.end()) throw Error("no result for condition '" + condition + "'");
    const auto d = c->second.find(dataset);
    if (d == c->second.end()) throw Error("no result for condition '" + condition + "' on dataset '" + dataset + "'");
    return d->second;
  }
};

/// Linear interpolation between order statistics at rank p * (n - 1).
inline double percentile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw Error("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Gathers one encoder's grid results and fixes its normalization reference.
/// Every dataset present must cover the whole grid.
inline NormalizationContext build_context(std::span<const FadResult> results, NormalizationPolicy policy,
                                          const std::vector<Condition>& grid) {
  if (results.empty()) throw Error("no FAD results to normalize");
  NormalizationContext ctx;
  ctx.encoder = results.front().encoder;
  ctx.policy = policy;
  std::set<std::string> datasets;
  for (const auto& r : results) {
    if (r.encoder != ctx.encoder) throw Error("mixed encoders in one normalization context");
    if (!find_condition(grid, r.condition)) continue;
    datasets.insert(r.dataset);
    ctx.per_condition_fads[r.condition][r.dataset] = r.value;
  }
  if (datasets.empty()) {
    std::string ids;
    for (const auto& c : grid) ids += (ids.empty() ? "" : ", ") + c.id;
    throw Error("suite incomplete: " + ids);
  }
  for (const auto& ds : datasets) {
    std::string missing;
    for (const auto& c : grid) {
      const auto it = ctx.per_condition_fads.find(c.id);
      if (it == ctx.per_condition_fads.end() || !it->second.contains(ds)) {
        missing += (missing.empty() ? "" : ", ") + c.id;
      }
    }
    if (!missing.empty()) throw Error("suite incomplete: " + missing + " (encoder '" + ctx.encoder + "', dataset '" + ds + "')");
  }

  std::vector<double> values;
  for (const auto& [cond, by_ds] : ctx.per_condition_fads) {
    for (const auto& [ds, v] : by_ds) values.push_back(v);
  }
  ctx.fad_max = policy == NormalizationPolicy::max ? *std::max_element(values.begin(), values.end())
                                                   : percentile_linear(values, 0.95);
  return ctx;
}

/// log(1 + fad) / log(1 + fad_max), clamped to [0, 1].
inline double s_norm(double fad, const NormalizationContext& ctx) {
  if (!(ctx.fad_max > 0.0)) {
    throw Error("degenerate normalization context for encoder '" + ctx.encoder + "' (fad_max = 0)");
  }
  if (fad < 0.0) throw Error("negative FAD");
  const double s = std::log1p(fad) / std::log1p(ctx.fad_max);
  return std::clamp(s, 0.0, 1.0);
}

/// Mean normalized score of one condition over the datasets in ctx.
inline double condition_score(const NormalizationContext& ctx, const std::string& condition) {
  const auto it = ctx.per_condition_fads.find(condition);
  if (it == ctx.per_condition_fads.end() || it->second.empty()) {
    throw Error("missing condition '" + condition + "' for encoder '" + ctx.encoder + "'");
  }
  double sum = 0.0;
  for (const auto& [ds, v] : it->second) sum += s_norm(v, ctx);
  return sum / static_cast<double>(it->second.size());
}

/// One row of the comparison table. Recall is reported inverted so that a
/// larger value is better on every axis.
struct AxisProfile {
  std::string encoder;
  double recall = 0.0;
  double precision = 0.0;
  double semantic = 0.0;
  double structural = 0.0;
  double recall_sensitivity = 0.0;  ///< mean S_norm over recall conditions, before inversion

  double get(Axis axis) const {
    switch (axis) {
      case Axis::recall: return recall;
      case Axis::precision: return precision;
      case Axis::semantic: return semantic;
      case Axis::structural: return structural;
    }
    return 0.0;
  }
};

/// Unweighted mean of S_norm over every (condition, dataset) cell of an axis.
inline AxisProfile axis_profile(const NormalizationContext& ctx, const std::vector<Condition>& grid) {
  std::map<Axis, std::pair<double, std::size_t>> acc;
  const auto datasets = ctx.datasets();
  for (const auto& c : grid) {
    for (const auto& ds : datasets) {
      auto& [sum, n] = acc[c.axis];
      sum += s_norm(ctx.raw(c.id, ds), ctx);
      ++n;
    }
  }
  auto mean = [&](Axis a) {
    const auto it = acc.find(a);
    if (it == acc.end() || it->second.second == 0) {
      throw Error("axis '" + std::string(to_string(a)) + "' has no conditions in the grid");
    }
    return it->second.first / static_cast<double>(it->second.second);
  };
  AxisProfile p;
  p.encoder = ctx.encoder;
  p.recall_sensitivity = mean(Axis::recall);
  p.recall = 1.0 - p.recall_sensitivity;
  p.precision = mean(Axis::precision);
  p.semantic = mean(Axis::semantic);
  p.structural = mean(Axis::structural);
  return p;
}

inline AxisProfile axis_profile(std::span<const FadResult> results, const NormalizationContext& ctx,
                                const std::vector<Condition>& grid) {
  NormalizationContext scoped = ctx;
  scoped.per_condition_fads.clear();
  for (const auto& r : results) {
    if (r.encoder == ctx.encoder && find_condition(grid, r.condition)) {
      scoped.per_condition_fads[r.condition][r.dataset] = r.value;
    }
  }
  return axis_profile(scoped, grid);
}

/// Sample Pearson correlation.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("pearson: length mismatch");
  if (xs.size() < 3) throw Error("pearson: need at least 3 pairs");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("undefined correlation: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct TrajectoryPoint {
  std::string condition;
  double param = 0.0;
  double fad = 0.0;
  double s_norm = 0.0;
};

/// Normalized response of every grid condition of one kind on one dataset,
/// ordered by increasing severity (pitch runs from the lowest to the highest
/// shift and spans both the recall and semantic zones).
inline std::vector<TrajectoryPoint> trajectory(const NormalizationContext& ctx, const std::vector<Condition>& grid,
                                               PerturbKind kind, const std::string& dataset) {
  std::vector<const Condition*> members;
  for (const auto& c : grid) {
    if (c.kind == kind) members.push_back(&c);
  }
  std::stable_sort(members.begin(), members.end(),
                   [](const Condition* a, const Condition* b) { return severity_key(*a) < severity_key(*b); });
  std::vector<TrajectoryPoint> out;
  for (const Condition* c : members) {
    const double fad = ctx.raw(c->id, dataset);
    out.push_back({c->id, c->param, fad, s_norm(fad, ctx)});
  }
  return out;
}

/// S_norm(-magnitude) / S_norm(+magnitude): below 1 means a weaker response
/// to downward shifts.
inline double asymmetry_ratio(std::span<const TrajectoryPoint> pitch, double magnitude) {
  const TrajectoryPoint* down = nullptr;
  const TrajectoryPoint* up = nullptr;
  for (const auto& p : pitch) {
    if (p.param == -magnitude) down = &p;
    if (p.param == magnitude) up = &p;
  }
  if (!down || !up) throw Error("asymmetry ratio needs both -" + std::to_string(magnitude) + " and +" +
                                std::to_string(magnitude) + " st");
  if (up->s_norm == 0.0) throw Error("undefined ratio: zero upward response");
  return down->s_norm / up->s_norm;
}

}  // namespace fadprof
