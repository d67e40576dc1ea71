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

#include <spawn.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/embedding.hpp"
#include "fadprof/error.hpp"

extern char** environ;

namespace fadprof {

namespace bridge_detail {

inline std::vector<std::string> split_command(const std::string& command) {
  std::istringstream in(command);
  std::vector<std::string> parts;
  for (std::string word; in >> word;) parts.push_back(word);
  if (parts.empty()) throw Error("empty bridge command");
  return parts;
}

inline std::string tail_of(const fs::path& path, std::size_t max_bytes = 4096) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() > max_bytes) text = "..." + text.substr(text.size() - max_bytes);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace bridge_detail

struct ProcessResult {
  int exit_code = -1;
  std::string diagnostics;
};

/// Spawns argv directly (no shell) with stdout and stderr captured to log.
inline ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& log) {
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  if (log.has_parent_path()) fs::create_directories(log.parent_path());
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, 1, 2);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) return {127, "cannot start '" + argv[0] + "': " + std::strerror(rc)};

  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return {-1, "waitpid failed: " + std::string(std::strerror(errno))};
  }
  ProcessResult result;
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
  result.diagnostics = bridge_detail::tail_of(log);
  return result;
}

/// Ids the bridge must produce: one per *.wav in the directory.
inline std::vector<std::string> expected_clip_ids(const fs::path& wav_dir) {
  std::vector<std::string> ids;
  for (const auto& file : discover_corpus(wav_dir)) ids.push_back(sanitize_clip_id(file.stem().string()));
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Checks a bridge-produced set against the encoder's width and the clip list.
inline void check_bridge_output(const EmbeddingSet& set, const EncoderSpec& spec,
                                const std::vector<std::string>& expected) {
  if (set.dim() != static_cast<std::size_t>(spec.dim)) {
    throw Error("encoder dim mismatch: '" + spec.name + "' expects " + std::to_string(spec.dim) +
                ", bridge wrote " + std::to_string(set.dim()));
  }
  std::vector<std::string> missing, extra;
  std::set_difference(expected.begin(), expected.end(), set.ids.begin(), set.ids.end(), std::back_inserter(missing));
  std::set_difference(set.ids.begin(), set.ids.end(), expected.begin(), expected.end(), std::back_inserter(extra));
  if (missing.empty() && extra.empty()) return;
  std::string msg = "manifest mismatch for encoder '" + spec.name + "':";
  for (const auto& id : missing) msg += " missing " + id;
  for (const auto& id : extra) msg += " unexpected " + id;
  throw Error(msg);
}

/// Runs `<command> --encoder <name> --input-dir <dir> --output <file>
/// --sample-rate <rate>` and validates what it wrote.
inline EmbeddingSet embed_via_bridge(const EncoderSpec& spec, const fs::path& wav_dir, const fs::path& out_file) {
  if (spec.source.type != EncoderSource::Type::bridge) throw Error("encoder '" + spec.name + "' is not a bridge encoder");
  const auto expected = expected_clip_ids(wav_dir);

  auto argv = bridge_detail::split_command(spec.source.target);
  argv.insert(argv.end(), {"--encoder", spec.name, "--input-dir", wav_dir.string(), "--output",
                           out_file.string(), "--sample-rate", std::to_string(spec.native_rate)});
  std::error_code ec;
  fs::remove(out_file, ec);
  const fs::path log = out_file.string() + ".log";
  const auto result = run_process(argv, log);
  if (result.exit_code != 0) {
    throw Error("bridge failed for encoder '" + spec.name + "' (exit " + std::to_string(result.exit_code) +
                ")" + (result.diagnostics.empty() ? "" : ": " + result.diagnostics));
  }
  if (!fs::exists(out_file)) throw Error("bridge failed for encoder '" + spec.name + "': no output file written");
  EmbeddingSet set = load_embeddings(out_file);
  set.encoder = spec.name;
  check_bridge_output(set, spec, expected);
  return set;
}

}  // namespace fadprof
