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

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/condition.hpp"
#include "fadprof/error.hpp"
#include "fadprof/fad.hpp"
#include "fadprof/scoring.hpp"

namespace fadprof {

using Json = nlohmann::json;

/// Structured documents are JSON with sorted keys, two-space indent and a
/// trailing newline; doubles use shortest round-trip formatting.
inline std::string dump_struct(const Json& doc) { return doc.dump(2) + "\n"; }

inline void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

/// Three decimals, ties rounded up.
inline std::string format_score(double v) {
  const double scaled = std::floor(v * 1000.0 + 0.5 + 1e-9);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", scaled / 1000.0);
  return buf;
}

inline constexpr const char* kAxisColumns[] = {"Rec.", "Prec.", "Sem.", "Struct."};

struct TableOutput {
  std::string csv;
  Json doc;
};

/// Comparison table; the best (largest) value of each column is marked,
/// ties included. Absent encoders keep their row with "absent" cells.
inline TableOutput emit_table(std::span<const AxisProfile> profiles,
                              std::span<const std::string> absent = {}) {
  if (profiles.empty() && absent.empty()) throw Error("table needs at least one profile");
  std::array<double, 4> best{};
  best.fill(-1.0);
  for (const auto& p : profiles) {
    for (std::size_t a = 0; a < 4; ++a) best[a] = std::max(best[a], p.get(kAllAxes[a]));
  }

  TableOutput out;
  out.csv = "encoder";
  for (const char* col : kAxisColumns) out.csv += std::string(",") + col;
  out.csv += "\n";
  Json rows = Json::array();
  for (const auto& p : profiles) {
    out.csv += p.encoder;
    Json row = {{"encoder", p.encoder}, {"status", "ok"}};
    for (std::size_t a = 0; a < 4; ++a) {
      const double v = p.get(kAllAxes[a]);
      const bool is_best = v == best[a];
      const std::string shown = format_score(v);
      out.csv += "," + shown + (is_best ? "*" : "");
      row[std::string(to_string(kAllAxes[a]))] = {{"value", v}, {"display", shown}, {"best", is_best}};
    }
    out.csv += "\n";
    rows.push_back(row);
  }
  for (const auto& name : absent) {
    out.csv += name + ",absent,absent,absent,absent\n";
    rows.push_back({{"encoder", name}, {"status", "absent"}});
  }
  out.doc = {{"kind", "axis_table"},
             {"columns", {"recall", "precision", "semantic", "structural"}},
             {"best_marker", "*"},
             {"rows", rows}};
  return out;
}

/// Radar series: Recall, Precision, Semantic, Structural per encoder. Recall
/// is already inverted, so outermost is better on every spoke.
inline Json emit_radar(std::span<const AxisProfile> profiles) {
  Json series = Json::array();
  for (const auto& p : profiles) {
    series.push_back({{"encoder", p.encoder}, {"values", {p.recall, p.precision, p.semantic, p.structural}}});
  }
  return {{"kind", "radar"}, {"axes", {"recall", "precision", "semantic", "structural"}}, {"series", series}};
}

inline constexpr const char* kBarLeft[] = {"reverse", "shuffle_100ms"};
inline constexpr const char* kBarRight[] = {"pitch_+8st", "formant_1.4x"};

/// Structural (left) against semantic (right) bars. Solid bars are reversal
/// and +8 st, hatched bars are 100 ms shuffle and the 1.4x formant shift.
/// Values are condition scores averaged over datasets.
inline Json emit_diverging_bars(std::span<const NormalizationContext> contexts) {
  Json series = Json::array();
  for (const auto& ctx : contexts) {
    Json left = Json::array(), right = Json::array();
    for (const char* c : kBarLeft) left.push_back(condition_score(ctx, c));
    for (const char* c : kBarRight) right.push_back(condition_score(ctx, c));
    series.push_back({{"encoder", ctx.encoder}, {"left", left}, {"right", right}});
  }
  return {{"kind", "diverging_bars"},
          {"left_conditions", {kBarLeft[0], kBarLeft[1]}},
          {"right_conditions", {kBarRight[0], kBarRight[1]}},
          {"styles", {"solid", "hatched"}},
          {"series", series}};
}

inline Json emit_trajectory(std::span<const NormalizationContext> contexts, const std::vector<Condition>& grid,
                            PerturbKind kind, const std::string& dataset) {
  Json series = Json::array();
  for (const auto& ctx : contexts) {
    Json points = Json::array();
    for (const auto& p : trajectory(ctx, grid, kind, dataset)) {
      points.push_back({{"condition", p.condition}, {"param", p.param}, {"fad", p.fad}, {"s_norm", p.s_norm}});
    }
    series.push_back({{"encoder", ctx.encoder}, {"points", points}});
  }
  return {{"kind", "trajectory"},
          {"perturbation", std::string(to_string(kind))},
          {"param", std::string(param_name(kind))},
          {"dataset", dataset},
          {"series", series}};
}

/// Pearson r between the structural and semantic columns across encoders.
inline Json emit_correlation(std::span<const AxisProfile> profiles) {
  std::vector<double> structural, semantic;
  Json encoders = Json::array();
  for (const auto& p : profiles) {
    structural.push_back(p.structural);
    semantic.push_back(p.semantic);
    encoders.push_back(p.encoder);
  }
  Json doc = {{"kind", "correlation"}, {"x", "structural"}, {"y", "semantic"}, {"encoders", encoders},
              {"structural", structural}, {"semantic", semantic}};
  try {
    doc["pearson_r"] = pearson(structural, semantic);
  } catch (const Error& e) {
    doc["pearson_r"] = nullptr;
    doc["reason"] = e.what();
  }
  return doc;
}

/// Per-condition raw FAD and S_norm for every encoder, plus fad_max, so every
/// normalized number can be recomputed from this file alone.
inline Json emit_scores(std::span<const NormalizationContext> contexts) {
  Json encoders = Json::object();
  for (const auto& ctx : contexts) {
    Json conditions = Json::object();
    for (const auto& [cond, by_ds] : ctx.per_condition_fads) {
      Json cells = Json::object();
      for (const auto& [ds, fad] : by_ds) cells[ds] = {{"fad", fad}, {"s_norm", s_norm(fad, ctx)}};
      conditions[cond] = cells;
    }
    encoders[ctx.encoder] = {{"fad_max", ctx.fad_max}, {"policy", std::string(to_string(ctx.policy))},
                             {"conditions", conditions}};
  }
  return {{"kind", "scores"}, {"normalization", "log1p(fad) / log1p(fad_max)"}, {"encoders", encoders}};
}

inline Json fad_result_json(const FadResult& r) {
  const auto& d = r.diagnostics;
  return {{"encoder", r.encoder},
          {"dataset", r.dataset},
          {"condition", r.condition},
          {"value", r.value},
          {"mean_term", r.mean_term},
          {"trace_term", r.trace_term},
          {"clamped_cov_eigenvalues", d.clamped_cov_eigenvalues},
          {"clamped_product_eigenvalues", d.clamped_product_eigenvalues},
          {"min_eigenvalue", d.min_eigenvalue},
          {"pre_clamp_value", d.pre_clamp_value},
          {"value_clamped", d.value_clamped},
          {"ridge", d.ridge}};
}

inline FadResult fad_result_from_json(const Json& j) {
  FadResult r;
  r.encoder = j.at("encoder").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.condition = j.at("condition").get<std::string>();
  r.value = j.at("value").get<double>();
  r.mean_term = j.at("mean_term").get<double>();
  r.trace_term = j.at("trace_term").get<double>();
  auto& d = r.diagnostics;
  d.clamped_cov_eigenvalues = j.value("clamped_cov_eigenvalues", 0);
  d.clamped_product_eigenvalues = j.value("clamped_product_eigenvalues", 0);
  d.min_eigenvalue = j.value("min_eigenvalue", 0.0);
  d.pre_clamp_value = j.value("pre_clamp_value", r.value);
  d.value_clamped = j.value("value_clamped", false);
  d.ridge = j.value("ridge", 0.0);
  return r;
}

/// Outcome of one encoder in a run; failed encoders carry only a reason.
struct EncoderOutcome {
  std::string encoder;
  std::vector<FadResult> results;
  std::string failure;  ///< empty on success
};

struct ReportInputs {
  std::string fingerprint;
  std::uint64_t seed = 0;
  NormalizationPolicy policy = NormalizationPolicy::max;
  bool regularize = false;
  std::vector<Condition> grid;
  std::vector<std::string> datasets;
  std::vector<EncoderOutcome> encoders;
  Json config = Json::object();
};

enum class ReportStatus { complete, partial };

/// Writes the report bundle into dir. Identical inputs give byte-identical
/// files.
inline ReportStatus emit_run_report(const fs::path& dir, const ReportInputs& in) {
  std::vector<NormalizationContext> contexts;
  std::vector<AxisProfile> profiles;
  std::vector<std::string> absent;
  Json encoder_status = Json::object();
  for (const auto& e : in.encoders) {
    if (!e.failure.empty()) {
      absent.push_back(e.encoder);
      encoder_status[e.encoder] = {{"status", "absent"}, {"reason", e.failure}};
      continue;
    }
    try {
      auto ctx = build_context(e.results, in.policy, in.grid);
      profiles.push_back(axis_profile(ctx, in.grid));
      contexts.push_back(std::move(ctx));
      encoder_status[e.encoder] = {{"status", "ok"}};
    } catch (const Error& err) {
      absent.push_back(e.encoder);
      encoder_status[e.encoder] = {{"status", "absent"}, {"reason", err.what()}};
    }
  }
  const ReportStatus status = absent.empty() && !profiles.empty() ? ReportStatus::complete : ReportStatus::partial;

  fs::create_directories(dir);
  std::map<std::string, std::string> files;  // name -> contents
  if (!profiles.empty() || !absent.empty()) {
    const auto table = emit_table(profiles, absent);
    files["table.csv"] = table.csv;
    files["table.struct"] = dump_struct(table.doc);
  }
  files["radar.struct"] = dump_struct(emit_radar(profiles));
  files["correlation.struct"] = dump_struct(emit_correlation(profiles));
  files["scores.struct"] = dump_struct(emit_scores(contexts));
  try {
    files["bars.struct"] = dump_struct(emit_diverging_bars(contexts));
  } catch (const Error& err) {
    files["bars.struct"] = dump_struct({{"kind", "diverging_bars"}, {"error", err.what()}});
  }
  for (auto kind : kAllKinds) {
    const bool in_grid = std::any_of(in.grid.begin(), in.grid.end(), [&](const Condition& c) { return c.kind == kind; });
    if (!in_grid) continue;
    for (const auto& ds : in.datasets) {
      files["trajectory_" + std::string(to_string(kind)) + "_" + ds + ".struct"] =
          dump_struct(emit_trajectory(contexts, in.grid, kind, ds));
    }
  }

  Json events = Json::array();
  for (const auto& e : in.encoders) {
    for (const auto& r : e.results) {
      if (r.diagnostics.any_event()) events.push_back(fad_result_json(r));
    }
  }
  Json grid_ids = Json::array();
  for (const auto& c : in.grid) grid_ids.push_back(c.id);
  files["provenance.struct"] = dump_struct({{"kind", "provenance"},
                                            {"fingerprint", in.fingerprint},
                                            {"seed", in.seed},
                                            {"normalization_policy", std::string(to_string(in.policy))},
                                            {"percentile_rule", "linear interpolation at rank 0.95*(n-1)"},
                                            {"log_base", "e"},
                                            {"covariance_divisor", "N-1"},
                                            {"regularization", in.regularize},
                                            {"fad_events", events},
                                            {"grid", grid_ids},
                                            {"datasets", in.datasets},
                                            {"config", in.config}});

  Json listing = Json::array();
  for (const auto& [name, text] : files) listing.push_back(name);
  files["index.struct"] = dump_struct({{"kind", "index"},
                                       {"run_id", "run-" + in.fingerprint},
                                       {"fingerprint", in.fingerprint},
                                       {"status", status == ReportStatus::complete ? "complete" : "partial"},
                                       {"encoders", encoder_status},
                                       {"files", listing}});
  for (const auto& [name, text] : files) write_text(dir / name, text);
  return status;
}

}  // namespace fadprof
