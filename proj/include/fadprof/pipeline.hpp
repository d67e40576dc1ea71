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
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/bridge.hpp"
#include "fadprof/condition.hpp"
#include "fadprof/embedding.hpp"
#include "fadprof/encoders.hpp"
#include "fadprof/error.hpp"
#include "fadprof/fad.hpp"
#include "fadprof/log.hpp"
#include "fadprof/loudness.hpp"
#include "fadprof/parallel.hpp"
#include "fadprof/perturb.hpp"
#include "fadprof/random.hpp"
#include "fadprof/report.hpp"
#include "fadprof/resample.hpp"
#include "fadprof/scoring.hpp"

namespace fadprof {

inline constexpr const char* kWorkspaceEnv = "FADPROF_WORKSPACE";
inline constexpr const char* kCleanCondition = "clean";

enum ExitCode : int { kExitOk = 0, kExitFatal = 1, kExitPartial = 2 };

struct DatasetSpec {
  std::string name;
  fs::path root;
  std::optional<fs::path> manifest;
};

/// Declarative description of one profiling run.
struct RunConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<EncoderSpec> encoders;
  std::vector<Condition> grid = default_grid();
  bool uses_default_grid = true;
  std::uint64_t seed = 0;
  NormalizationPolicy policy = NormalizationPolicy::max;
  fs::path workspace = "workspace";
  unsigned workers = 0;  ///< 0 = one per hardware thread
  std::optional<int> corpus_rate;
  double target_lufs = kTargetLufs;
  bool regularize = false;

  unsigned effective_workers() const { return workers == 0 ? default_workers() : workers; }
};

inline fs::path resolve_path(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

/// Reads the structured configuration. Relative paths resolve against
/// base_dir (normally the config file's directory).
inline RunConfig parse_config(const Json& j, const fs::path& base_dir = {}) {
  RunConfig cfg;
  try {
    for (const auto& d : j.at("datasets")) {
      DatasetSpec ds;
      ds.name = d.at("name").get<std::string>();
      ds.root = resolve_path(base_dir, d.at("root").get<std::string>());
      if (d.contains("manifest") && !d["manifest"].is_null()) {
        ds.manifest = resolve_path(base_dir, d["manifest"].get<std::string>());
      }
      cfg.datasets.push_back(std::move(ds));
    }
    for (const auto& e : j.at("encoders")) {
      const auto source = EncoderSource::parse(e.at("source").get<std::string>());
      EncoderSpec spec;
      if (source.type == EncoderSource::Type::builtin) spec = builtin_encoder_spec(source.target);
      spec.source = source;
      if (spec.source.type == EncoderSource::Type::files) {
        spec.source.target = resolve_path(base_dir, source.target).string();
      }
      spec.name = e.value("name", spec.name);
      spec.native_rate = e.value("native_rate", spec.native_rate);
      spec.dim = e.value("dim", spec.dim);
      cfg.encoders.push_back(std::move(spec));
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      if (g.is_string()) {
        if (g.get<std::string>() != "default") throw Error("grid must be \"default\" or a list of condition ids");
      } else {
        cfg.grid.clear();
        cfg.uses_default_grid = false;
        for (const auto& id : g) cfg.grid.push_back(parse_condition(id.get<std::string>()));
      }
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.policy = parse_policy(j.value("policy", std::string("max")));
    cfg.workspace = resolve_path(base_dir, j.value("workspace", std::string("workspace")));
    cfg.workers = j.value("workers", 0u);
    if (j.contains("corpus_rate") && !j["corpus_rate"].is_null()) cfg.corpus_rate = j["corpus_rate"].get<int>();
    cfg.target_lufs = j.value("target_lufs", kTargetLufs);
    cfg.regularize = j.value("regularize", false);
  } catch (const Json::exception& e) {
    throw Error(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config '" + path.string() + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw Error("config '" + path.string() + "' is not a valid structured document: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

inline Json config_to_json(const RunConfig& cfg) {
  Json datasets = Json::array();
  for (const auto& d : cfg.datasets) {
    Json ds = {{"name", d.name}, {"root", d.root.string()}};
    if (d.manifest) ds["manifest"] = d.manifest->string();
    datasets.push_back(ds);
  }
  Json encoders = Json::array();
  for (const auto& e : cfg.encoders) {
    encoders.push_back({{"name", e.name}, {"native_rate", e.native_rate}, {"dim", e.dim}, {"source", e.source.str()}});
  }
  Json grid;
  if (cfg.uses_default_grid) {
    grid = "default";
  } else {
    grid = Json::array();
    for (const auto& c : cfg.grid) grid.push_back(c.id);
  }
  return {{"datasets", datasets},
          {"encoders", encoders},
          {"grid", grid},
          {"seed", cfg.seed},
          {"policy", std::string(to_string(cfg.policy))},
          {"workspace", cfg.workspace.string()},
          {"workers", cfg.workers},
          {"corpus_rate", cfg.corpus_rate ? Json(*cfg.corpus_rate) : Json(nullptr)},
          {"target_lufs", cfg.target_lufs},
          {"regularize", cfg.regularize}};
}

/// Checks everything that can be checked before any audio is touched.
inline void validate_config(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw Error("configuration lists no datasets");
  if (cfg.encoders.empty()) throw Error("configuration lists no encoders");
  std::set<std::string> names;
  for (const auto& d : cfg.datasets) {
    if (!is_valid_clip_id(d.name)) throw Error("dataset name '" + d.name + "' must use [A-Za-z0-9_-]");
    if (d.name == "emb" || d.name == "report" || d.name == "scores") throw Error("dataset name '" + d.name + "' is reserved");
    if (!names.insert(d.name).second) throw Error("duplicate dataset name '" + d.name + "'");
  }
  names.clear();
  for (const auto& e : cfg.encoders) {
    validate_encoder_spec(e);
    if (!names.insert(e.name).second) throw Error("duplicate encoder name '" + e.name + "'");
    if (e.source.type == EncoderSource::Type::builtin) {
      const auto builtin = builtin_encoder_spec(e.source.target);
      if (builtin.dim != e.dim) throw Error("encoder dim mismatch: builtin '" + e.source.target + "' is " + std::to_string(builtin.dim) + "-dim");
    }
  }
  if (cfg.grid.empty()) throw Error("empty perturbation grid");
  names.clear();
  for (const auto& c : cfg.grid) {
    if (parse_condition(c.id) != c) throw Error("inconsistent condition '" + c.id + "'");
    if (!names.insert(c.id).second) throw Error("duplicate condition '" + c.id + "'");
  }
  for (auto axis : kAllAxes) {
    if (std::none_of(cfg.grid.begin(), cfg.grid.end(), [&](const Condition& c) { return c.axis == axis; })) {
      throw Error("grid has no condition on the " + std::string(to_string(axis)) + " axis");
    }
  }
  if (cfg.corpus_rate && *cfg.corpus_rate <= 0) throw Error("corpus_rate must be positive");
}

/// Counters for what a pipeline computed versus found cached.
struct StageStats {
  std::atomic<int> clean_computed{0}, clean_cached{0};
  std::atomic<int> perturb_computed{0}, perturb_cached{0};
  std::atomic<int> embed_computed{0}, embed_cached{0};
};

/// Workspace layout:
///   <ws>/<dataset>/{clean,<condition>}/<clip>.wav   (+ .stamp)
///   <ws>/emb/<encoder>/<dataset>/<condition>.emb1   (+ .stamp)
///   <ws>/scores/<encoder>.struct
///   <ws>/report/
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
    if (const char* ws = std::getenv(kWorkspaceEnv); ws && *ws) cfg_.workspace = ws;
    validate_config(cfg_);
  }

  const RunConfig& config() const { return cfg_; }
  const StageStats& stats() const { return stats_; }

  fs::path audio_dir(const std::string& dataset, const std::string& condition) const {
    return cfg_.workspace / dataset / condition;
  }
  fs::path embedding_path(const std::string& encoder, const std::string& dataset, const std::string& condition) const {
    return cfg_.workspace / "emb" / encoder / dataset / (condition + ".emb1");
  }
  fs::path scores_path(const std::string& encoder) const { return cfg_.workspace / "scores" / (encoder + ".struct"); }
  fs::path report_dir() const { return cfg_.workspace / "report"; }
  /// Present while the encoder's last embed attempt failed.
  fs::path embed_failure_path(const std::string& encoder) const {
    return cfg_.workspace / "emb" / encoder / "failure.txt";
  }

  /// Stage 1: load, downmix, loudness-normalize (optionally resample) every
  /// dataset into <ws>/<dataset>/clean. Silent clips are dropped.
  void prepare() {
    for (const auto& ds : cfg_.datasets) prepare_dataset(ds);
  }

  /// Stage 2: every grid condition for every clean clip.
  void perturb() {
    for (const auto& ds : cfg_.datasets) {
      const auto clean_key = require_stamp(audio_dir(ds.name, kCleanCondition));
      std::optional<std::vector<AudioClip>> clean;
      for (const auto& c : cfg_.grid) perturb_condition(ds.name, c, clean_key, clean);
    }
  }

  /// Stage 3: embeddings for clean and every condition, per encoder. Returns
  /// the failure reason per encoder (empty when it succeeded).
  std::map<std::string, std::string> embed() {
    std::map<std::string, std::string> failures;
    for (const auto& enc : cfg_.encoders) {
      try {
        for (const auto& ds : cfg_.datasets) {
          embed_condition(enc, ds.name, kCleanCondition);
          for (const auto& c : cfg_.grid) embed_condition(enc, ds.name, c.id);
        }
        failures[enc.name] = "";
        fs::remove(embed_failure_path(enc.name));
      } catch (const Error& e) {
        log::error("encoder '", enc.name, "': ", e.what());
        failures[enc.name] = e.what();
        write_text(embed_failure_path(enc.name), std::string(e.what()) + "\n");
      }
    }
    return failures;
  }

  /// Stage 4: FAD of every condition against clean, per encoder, written to
  /// <ws>/scores/<encoder>.struct. Returns the per-encoder outcomes.
  std::vector<EncoderOutcome> score() {
    std::vector<EncoderOutcome> outcomes(cfg_.encoders.size());
    const FadOptions options{cfg_.regularize};
    parallel_for(cfg_.encoders.size(), cfg_.effective_workers(), [&](std::size_t i) {
      const auto& enc = cfg_.encoders[i];
      auto& out = outcomes[i];
      out.encoder = enc.name;
      try {
        out.results = score_encoder(enc, options);
      } catch (const Error& e) {
        out.failure = e.what();
        out.results.clear();
        // The embed stage's own reason is more useful than the missing sets.
        const auto failed = embed_failure_path(enc.name);
        if (fs::exists(failed)) {
          std::ifstream in(failed);
          std::string reason((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
          while (!reason.empty() && reason.back() == '\n') reason.pop_back();
          out.failure = "embedding failed: " + reason;
        }
      }
    });
    for (const auto& out : outcomes) {
      Json results = Json::array();
      for (const auto& r : out.results) results.push_back(fad_result_json(r));
      Json doc = {{"kind", "fad_results"},
                  {"encoder", out.encoder},
                  {"status", out.failure.empty() ? "ok" : "failed"},
                  {"failure", out.failure},
                  {"covariance_divisor", "N-1"},
                  {"regularization", cfg_.regularize},
                  {"results", results}};
      write_text(scores_path(out.encoder), dump_struct(doc));
      if (!out.failure.empty()) log::error("scoring encoder '", out.encoder, "': ", out.failure);
    }
    return outcomes;
  }

  /// Stage 5: report bundle from <ws>/scores.
  ReportStatus report() {
    ReportInputs in;
    in.fingerprint = fingerprint();
    in.seed = cfg_.seed;
    in.policy = cfg_.policy;
    in.regularize = cfg_.regularize;
    in.grid = cfg_.grid;
    for (const auto& ds : cfg_.datasets) in.datasets.push_back(ds.name);
    in.config = config_to_json(cfg_);
    in.config.erase("workers");
    in.config.erase("workspace");
    for (const auto& enc : cfg_.encoders) {
      EncoderOutcome out;
      out.encoder = enc.name;
      const auto path = scores_path(enc.name);
      if (!fs::exists(path)) {
        out.failure = "no scores (run the score stage)";
      } else {
        std::ifstream f(path);
        Json doc;
        f >> doc;
        out.failure = doc.value("failure", std::string());
        if (doc.value("status", std::string("failed")) != "ok" && out.failure.empty()) out.failure = "scoring failed";
        for (const auto& r : doc.at("results")) out.results.push_back(fad_result_from_json(r));
      }
      in.encoders.push_back(std::move(out));
    }
    clear_report_dir();
    return emit_run_report(report_dir(), in);
  }

  /// Full pipeline. Exit code 0 on success, 2 when some encoder failed.
  int run() {
    prepare();
    perturb();
    embed();
    score();
    const auto status = report();
    log::info("report written to ", report_dir().string(), status == ReportStatus::complete ? "" : " (partial)");
    return status == ReportStatus::complete ? kExitOk : kExitPartial;
  }

  /// Hash of grid, seed, corpus content, encoders and normalization settings.
  std::string fingerprint() const {
    Hasher h;
    h.add("fadprof-run-v1").add(cfg_.seed).add(std::string(to_string(cfg_.policy))).add(std::uint64_t{cfg_.regularize});
    for (const auto& c : cfg_.grid) h.add(c.id);
    for (const auto& ds : cfg_.datasets) h.add(ds.name).add(require_stamp(audio_dir(ds.name, kCleanCondition)));
    for (const auto& e : cfg_.encoders) h.add(e.name).add(e.source.str()).add(std::uint64_t(e.native_rate)).add(std::uint64_t(e.dim));
    return h.hex();
  }

 private:
  struct Stamp {
    std::string key;
    Json extra;
  };

  static std::optional<Stamp> read_stamp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
      Json j;
      in >> j;
      return Stamp{j.at("key").get<std::string>(), j.value("extra", Json::object())};
    } catch (const Json::exception&) {
      return std::nullopt;
    }
  }

  static void write_stamp(const fs::path& path, const std::string& key, const Json& extra = Json::object()) {
    write_text(path, dump_struct({{"key", key}, {"extra", extra}}));
  }

  static fs::path dir_stamp(const fs::path& dir) { return dir / ".stamp"; }

  std::string require_stamp(const fs::path& dir) const {
    const auto stamp = read_stamp(dir_stamp(dir));
    if (!stamp) throw Error("'" + dir.string() + "' has not been produced yet (run the earlier stage first)");
    return stamp->key;
  }

  static void reset_dir(const fs::path& dir) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);
  }

  void clear_report_dir() const {
    const auto dir = report_dir();
    if (!fs::is_directory(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto ext = entry.path().extension();
      if (ext == ".struct" || ext == ".csv") fs::remove(entry.path());
    }
  }

  std::string corpus_key(const DatasetSpec& ds) const {
    Hasher h;
    h.add("clean-v1").add(static_cast<std::uint64_t>(std::llround(cfg_.target_lufs * 1e6)));
    h.add(static_cast<std::uint64_t>(cfg_.corpus_rate.value_or(0)));
    std::map<std::string, fs::path> files;
    for (const auto& f : discover_corpus(ds.root, ds.manifest)) files.emplace(sanitize_clip_id(f.stem().string()), f);
    for (const auto& [id, path] : files) {
      const auto bytes = wav_detail::read_file(path);
      h.add(id).add_bytes(bytes);
    }
    return h.hex();
  }

  void prepare_dataset(const DatasetSpec& ds) {
    const auto dir = audio_dir(ds.name, kCleanCondition);
    const auto key = corpus_key(ds);
    if (const auto stamp = read_stamp(dir_stamp(dir)); stamp && stamp->key == key) {
      log::info("cache hit: ", ds.name, "/clean");
      ++stats_.clean_cached;
      return;
    }
    std::vector<AudioClip> clips;
    try {
      clips = load_corpus(ds.root, ds.manifest);
    } catch (const Error& e) {
      throw Error("dataset '" + ds.name + "': " + e.what());
    }
    std::vector<std::optional<AudioClip>> ready(clips.size());
    std::vector<std::string> reasons(clips.size());
    parallel_for(clips.size(), cfg_.effective_workers(), [&](std::size_t i) {
      try {
        AudioClip clip = normalize_lufs(clips[i], cfg_.target_lufs).first;
        if (cfg_.corpus_rate) clip = resample(clip, *cfg_.corpus_rate);
        ready[i] = std::move(clip);
      } catch (const Error& e) {
        reasons[i] = e.what();
      }
    });
    reset_dir(dir);
    Json dropped = Json::array();
    std::size_t kept = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      if (!ready[i]) {
        log::warn("dataset '", ds.name, "', clip '", clips[i].id, "': ", reasons[i], "; excluded");
        dropped.push_back({{"clip", clips[i].id}, {"reason", reasons[i]}});
        continue;
      }
      write_wav(dir / (ready[i]->id + ".wav"), *ready[i]);
      ++kept;
    }
    if (kept < 2) throw Error("dataset '" + ds.name + "': insufficient corpus (" + std::to_string(kept) + " usable clips)");
    write_stamp(dir_stamp(dir), key, {{"clips", kept}, {"dropped", dropped}});
    ++stats_.clean_computed;
    log::info("prepared ", ds.name, "/clean: ", kept, " clips");
  }

  void perturb_condition(const std::string& dataset, const Condition& c, const std::string& clean_key,
                         std::optional<std::vector<AudioClip>>& clean) {
    const auto dir = audio_dir(dataset, c.id);
    const auto key = Hasher{}.add("perturb-v1").add(clean_key).add(c.id).add(cfg_.seed).hex();
    if (const auto stamp = read_stamp(dir_stamp(dir)); stamp && stamp->key == key) {
      log::info("cache hit: ", dataset, "/", c.id);
      ++stats_.perturb_cached;
      return;
    }
    if (!clean) clean = load_corpus(audio_dir(dataset, kCleanCondition));
    const auto& clips = *clean;
    reset_dir(dir);
    std::vector<std::string> reasons(clips.size());
    parallel_for(clips.size(), cfg_.effective_workers(), [&](std::size_t i) {
      try {
        AudioClip out = apply(clips[i], c, cfg_.seed);
        out.id = clips[i].id;
        write_wav(dir / (out.id + ".wav"), out);
      } catch (const Error& e) {
        reasons[i] = e.what();
      }
    });
    Json dropped = Json::array();
    for (std::size_t i = 0; i < clips.size(); ++i) {
      if (reasons[i].empty()) continue;
      log::warn("dataset '", dataset, "', condition '", c.id, "', clip '", clips[i].id, "': ", reasons[i], "; excluded");
      dropped.push_back({{"clip", clips[i].id}, {"reason", reasons[i]}});
    }
    write_stamp(dir_stamp(dir), key, {{"dropped", dropped}});
    ++stats_.perturb_computed;
    log::debug("perturbed ", dataset, "/", c.id);
  }

  void embed_condition(const EncoderSpec& enc, const std::string& dataset, const std::string& condition) {
    const auto wav_dir = audio_dir(dataset, condition);
    const auto audio_key = require_stamp(wav_dir);
    const auto out = embedding_path(enc.name, dataset, condition);
    const fs::path stamp_path = out.string() + ".stamp";
    Hasher h;
    h.add("embed-v1").add(audio_key).add(enc.name).add(enc.source.str()).add(std::uint64_t(enc.native_rate)).add(std::uint64_t(enc.dim));
    fs::path external;
    if (enc.source.type == EncoderSource::Type::files) {
      external = fs::path(enc.source.target) / dataset / (condition + ".emb1");
      if (!fs::exists(external)) throw Error("dataset '" + dataset + "', condition '" + condition + "': missing embedding file '" + external.string() + "'");
      h.add_bytes(wav_detail::read_file(external));
    }
    const auto key = h.hex();
    if (const auto stamp = read_stamp(stamp_path); stamp && stamp->key == key && fs::exists(out)) {
      log::info("cache hit: emb/", enc.name, "/", dataset, "/", condition);
      ++stats_.embed_cached;
      return;
    }
    try {
      EmbeddingSet set;
      switch (enc.source.type) {
        case EncoderSource::Type::builtin: {
          const auto clips = load_corpus(wav_dir);
          set = embed_builtin(enc, clips, cfg_.effective_workers());
          write_embeddings(out, set);
          break;
        }
        case EncoderSource::Type::files: {
          set = load_embeddings(external);
          set.encoder = enc.name;
          check_bridge_output(set, enc, expected_clip_ids(wav_dir));
          write_embeddings(out, set);
          break;
        }
        case EncoderSource::Type::bridge:
          fs::create_directories(out.parent_path());
          set = embed_via_bridge(enc, wav_dir, out);
          break;
      }
    } catch (const Error& e) {
      throw Error("dataset '" + dataset + "', condition '" + condition + "': " + e.what());
    }
    write_stamp(stamp_path, key);
    ++stats_.embed_computed;
  }

  std::vector<FadResult> score_encoder(const EncoderSpec& enc, const FadOptions& options) const {
    std::vector<FadResult> results;
    for (const auto& ds : cfg_.datasets) {
      std::string missing;
      for (const auto& c : cfg_.grid) {
        if (!fs::exists(embedding_path(enc.name, ds.name, c.id))) missing += (missing.empty() ? "" : ", ") + c.id;
      }
      if (!missing.empty()) {
        throw Error("suite incomplete: " + missing + " (encoder '" + enc.name + "', dataset '" + ds.name + "')");
      }
      const auto ref_path = embedding_path(enc.name, ds.name, kCleanCondition);
      if (!fs::exists(ref_path)) throw Error("missing clean embeddings for dataset '" + ds.name + "'");
      auto reference = load_embeddings(ref_path);
      reference.encoder = enc.name;
      reference.dataset = ds.name;
      validate_embeddings(reference, enc.dim);
      for (const auto& c : cfg_.grid) {
        auto perturbed = load_embeddings(embedding_path(enc.name, ds.name, c.id));
        perturbed.encoder = enc.name;
        perturbed.dataset = ds.name;
        perturbed.condition = c.id;
        try {
          validate_embeddings(perturbed, enc.dim);
          results.push_back(fad_from_sets(reference, perturbed, options));
        } catch (const Error& e) {
          throw Error("dataset '" + ds.name + "', condition '" + c.id + "': " + e.what());
        }
      }
    }
    return results;
  }

  RunConfig cfg_;
  StageStats stats_;
};

}  // namespace fadprof
