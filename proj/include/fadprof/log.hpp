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

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace fadprof::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline Level& threshold() {
  static Level level = Level::info;
  return level;
}

inline void set_level(Level level) { threshold() = level; }

inline void write(Level level, const std::string& message) {
  if (level < threshold()) return;
  static std::mutex mutex;
  static const char* tags[] = {"debug", "info", "warn", "error"};
  std::lock_guard lock(mutex);
  std::clog << '[' << tags[static_cast<int>(level)] << "] " << message << '\n';
}

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream out;
  (out << ... << args);
  return out.str();
}

template <typename... Args>
void debug(const Args&... args) { write(Level::debug, concat(args...)); }
template <typename... Args>
void info(const Args&... args) { write(Level::info, concat(args...)); }
template <typename... Args>
void warn(const Args&... args) { write(Level::warn, concat(args...)); }
template <typename... Args>
void error(const Args&... args) { write(Level::error, concat(args...)); }

}  // namespace fadprof::log
