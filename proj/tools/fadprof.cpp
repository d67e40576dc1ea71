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

// fadprof command-line driver.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "fadprof/condition.hpp"
#include "fadprof/log.hpp"
#include "fadprof/pipeline.hpp"
#include "fadprof/synth.hpp"
#include "fadprof/verify.hpp"

namespace {

using namespace fadprof;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string policy;
  std::optional<unsigned> workers;
  std::vector<std::string> only_encoder;
  std::vector<std::string> only_dataset;
  bool print_config = false;
  std::string log_level = "info";
};

RunConfig resolve_config(const GlobalOptions& g) {
  if (g.config.empty()) throw Error("--config is required for this subcommand");
  RunConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.policy.empty()) cfg.policy = parse_policy(g.policy);
  if (g.workers) cfg.workers = *g.workers;
  auto keep = [](auto& items, const std::vector<std::string>& names, const char* what) {
    if (names.empty()) return;
    for (const auto& n : names) {
      if (std::none_of(items.begin(), items.end(), [&](const auto& it) { return it.name == n; })) {
        throw Error(std::string("unknown ") + what + " '" + n + "'");
      }
    }
    std::erase_if(items, [&](const auto& it) { return std::find(names.begin(), names.end(), it.name) == names.end(); });
  };
  keep(cfg.encoders, g.only_encoder, "encoder");
  keep(cfg.datasets, g.only_dataset, "dataset");
  return cfg;
}

int cmd_gen_grid() {
  for (const auto& c : default_grid()) {
    std::printf("%s\t%s\t%s\t%g\n", c.id.c_str(), std::string(to_string(c.axis)).c_str(),
                std::string(to_string(c.kind)).c_str(), c.param);
  }
  return kExitOk;
}

int cmd_verify_dsp(std::uint64_t seed) {
  int failed = 0;
  for (const auto& c : verify::run_checks(seed)) {
    std::printf("%s  %-50s measured %.4f %s (expected %.4f, tol %.4f)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.measured, c.unit.c_str(), c.expected, c.tolerance);
    if (!c.passed) ++failed;
  }
  if (failed) std::printf("%d check(s) failed\n", failed);
  return failed ? kExitFatal : kExitOk;
}

log::Level parse_level(const std::string& s) {
  if (s == "debug") return log::Level::debug;
  if (s == "info") return log::Level::info;
  if (s == "warn") return log::Level::warn;
  if (s == "error") return log::Level::error;
  throw Error("unknown log level '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Encoder-sensitivity profiling with Frechet Audio Distance"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration file");
  app.add_option("--seed", g.seed, "Override the perturbation seed");
  app.add_option("--policy", g.policy, "Normalization policy")->check(CLI::IsMember({"max", "p95"}));
  app.add_option("--workers", g.workers, "Worker threads (0 = all cores)");
  app.add_option("--only-encoder", g.only_encoder, "Restrict to these encoders");
  app.add_option("--only-dataset", g.only_dataset, "Restrict to these datasets");
  app.add_flag("--print-config", g.print_config, "Echo the resolved configuration");
  app.add_option("--log-level", g.log_level, "debug, info, warn or error");

  auto* gen_grid = app.add_subcommand("gen-grid", "Print the default perturbation grid");
  auto* perturb = app.add_subcommand("perturb", "Normalize the corpora and render every condition");
  auto* embed = app.add_subcommand("embed", "Compute embeddings for clean and perturbed audio");
  auto* score = app.add_subcommand("score", "Compute FAD per encoder, dataset and condition");
  auto* report = app.add_subcommand("report", "Write the report bundle");
  auto* run = app.add_subcommand("run", "Run every stage");
  auto* verify_dsp = app.add_subcommand("verify-dsp", "Run the DSP conformance self-test");
  auto* synth = app.add_subcommand("synth-corpus", "Write a synthetic envelope-varying corpus");
  std::string synth_dir;
  synth::CorpusOptions synth_opt;
  synth->add_option("dir", synth_dir, "Output directory")->required();
  synth->add_option("--count", synth_opt.count, "Number of clips");
  synth->add_option("--seconds", synth_opt.seconds, "Clip duration");
  synth->add_option("--rate", synth_opt.sample_rate, "Sample rate");
  synth->add_option("--synth-seed", synth_opt.seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    log::set_level(parse_level(g.log_level));
    if (gen_grid->parsed()) return cmd_gen_grid();
    if (verify_dsp->parsed()) return cmd_verify_dsp(g.seed.value_or(0));
    if (synth->parsed()) {
      synth::write_corpus(synth_dir, synth::envelope_corpus(synth_opt));
      return kExitOk;
    }
    Pipeline p(resolve_config(g));
    if (g.print_config) std::cout << dump_struct(config_to_json(p.config()));
    if (perturb->parsed()) {
      p.prepare();
      p.perturb();
      return kExitOk;
    }
    if (embed->parsed()) {
      const auto failures = p.embed();
      const bool any = std::any_of(failures.begin(), failures.end(), [](const auto& f) { return !f.second.empty(); });
      return any ? kExitPartial : kExitOk;
    }
    if (score->parsed()) {
      const auto outcomes = p.score();
      const bool any = std::any_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.failure.empty(); });
      for (const auto& o : outcomes) {
        if (!o.failure.empty()) std::fprintf(stderr, "encoder '%s': %s\n", o.encoder.c_str(), o.failure.c_str());
      }
      return any ? kExitPartial : kExitOk;
    }
    if (report->parsed()) return p.report() == ReportStatus::complete ? kExitOk : kExitPartial;
    if (run->parsed()) return p.run();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFatal;
  }
  return kExitFatal;
}
