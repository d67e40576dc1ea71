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

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fadprof/audio.hpp"
#include "fadprof/error.hpp"

namespace fadprof {

using EmbeddingMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Where an encoder's embeddings come from.
struct EncoderSource {
  enum class Type { builtin, files, bridge };
  Type type = Type::builtin;
  std::string target;  ///< builtin id, directory of EMB1 files, or bridge command

  static EncoderSource parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw Error("encoder source '" + std::string(text) + "' lacks a type prefix");
    const auto type = text.substr(0, colon);
    EncoderSource s;
    s.target = std::string(text.substr(colon + 1));
    if (type == "builtin") s.type = Type::builtin;
    else if (type == "files") s.type = Type::files;
    else if (type == "bridge") s.type = Type::bridge;
    else throw Error("unknown encoder source type '" + std::string(type) + "'");
    if (s.target.empty()) throw Error("encoder source '" + std::string(text) + "' has an empty target");
    return s;
  }

  std::string str() const {
    switch (type) {
      case Type::builtin: return "builtin:" + target;
      case Type::files: return "files:" + target;
      case Type::bridge: return "bridge:" + target;
    }
    return target;
  }
};

struct EncoderSpec {
  std::string name;
  int native_rate = 16000;
  int dim = 0;
  EncoderSource source;
};

/// Native rate and width of the six reference encoders.
struct KnownEncoder {
  std::string_view name;
  int native_rate;
  int dim;
};

inline constexpr KnownEncoder kKnownEncoders[] = {
    {"audiomae", 16000, 768}, {"encodec", 24000, 128}, {"wav2vec2", 16000, 768},
    {"vggish", 16000, 128},   {"clap", 48000, 512},    {"whisper", 16000, 1280},
};

inline std::string lowercase_alnum(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

inline std::optional<KnownEncoder> known_encoder(std::string_view name) {
  const auto key = lowercase_alnum(name);
  for (const auto& k : kKnownEncoders) {
    if (k.name == key) return k;
  }
  return std::nullopt;
}

inline void validate_encoder_spec(const EncoderSpec& spec) {
  if (spec.name.empty() || !is_valid_clip_id(spec.name)) {
    throw Error("encoder name '" + spec.name + "' must be non-empty and use [A-Za-z0-9_-]");
  }
  if (spec.native_rate <= 0) throw Error("encoder '" + spec.name + "': native rate must be positive");
  if (spec.dim <= 0) throw Error("encoder '" + spec.name + "': dim must be positive");
  if (auto k = known_encoder(spec.name)) {
    if (k->dim != spec.dim || k->native_rate != spec.native_rate) {
      throw Error("encoder '" + spec.name + "' must be " + std::to_string(k->native_rate) + " Hz / " +
                  std::to_string(k->dim) + "-dim");
    }
  }
}

/// Clip-level embeddings for one (encoder, dataset, condition) triple. Row i
/// belongs to ids[i]; ids are kept in lexicographic order.
struct EmbeddingSet {
  std::string encoder;
  std::string dataset;
  std::string condition = "clean";
  std::vector<std::string> ids;
  EmbeddingMatrix matrix;

  std::size_t count() const { return ids.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
};

/// Reorders rows so ids ascend.
inline void sort_rows(EmbeddingSet& set) {
  std::vector<std::size_t> order(set.ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return set.ids[a] < set.ids[b]; });
  if (std::is_sorted(order.begin(), order.end())) return;
  EmbeddingMatrix m(set.matrix.rows(), set.matrix.cols());
  std::vector<std::string> ids(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = set.matrix.row(static_cast<Eigen::Index>(order[i]));
    ids[i] = set.ids[order[i]];
  }
  set.matrix = std::move(m);
  set.ids = std::move(ids);
}

inline void check_finite(const EmbeddingSet& set) {
  for (Eigen::Index r = 0; r < set.matrix.rows(); ++r) {
    if (!set.matrix.row(r).allFinite()) {
      throw Error("non-finite embedding for clip '" + set.ids[static_cast<std::size_t>(r)] + "'");
    }
  }
}

/// Structural checks shared by every producer.
inline void validate_embeddings(const EmbeddingSet& set, std::optional<int> expected_dim = {}) {
  if (static_cast<std::size_t>(set.matrix.rows()) != set.ids.size()) {
    throw Error("embedding row count does not match id count");
  }
  if (expected_dim && set.dim() != static_cast<std::size_t>(*expected_dim)) {
    throw Error("encoder dim mismatch: expected " + std::to_string(*expected_dim) + ", got " +
                std::to_string(set.dim()));
  }
  for (std::size_t i = 1; i < set.ids.size(); ++i) {
    if (!(set.ids[i - 1] < set.ids[i])) throw Error("embedding ids not strictly ascending at '" + set.ids[i] + "'");
  }
  check_finite(set);
}

// ---------------------------------------------------------------------------
// EMB1: "FEMB", u32 version=1, u32 dim, u32 count, u32 id-table bytes,
// newline-separated ids, count*dim little-endian float32 row-major.

inline std::vector<unsigned char> encode_emb1(const EmbeddingSet& set) {
  std::string table;
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    if (set.ids[i].find('\n') != std::string::npos) throw Error("clip id contains a newline");
    if (i) table.push_back('\n');
    table += set.ids[i];
  }
  std::vector<unsigned char> out;
  auto put = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  out.insert(out.end(), {'F', 'E', 'M', 'B'});
  put(1);
  put(static_cast<std::uint32_t>(set.matrix.cols()));
  put(static_cast<std::uint32_t>(set.ids.size()));
  put(static_cast<std::uint32_t>(table.size()));
  out.insert(out.end(), table.begin(), table.end());
  for (Eigen::Index r = 0; r < set.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < set.matrix.cols(); ++c) put(std::bit_cast<std::uint32_t>(set.matrix(r, c)));
  }
  return out;
}

inline EmbeddingSet decode_emb1(std::span<const unsigned char> bytes, const std::string& origin = "<memory>") {
  auto bad = [&] { return Error("'" + origin + "': unrecognized format"); };
  auto u32 = [&](std::size_t at) { return wav_detail::u32le(bytes.data() + at); };
  if (bytes.size() < 20 || std::memcmp(bytes.data(), "FEMB", 4) != 0 || u32(4) != 1) throw bad();
  const std::uint64_t dim = u32(8), count = u32(12), table_len = u32(16);
  const std::uint64_t expected = 20 + table_len + count * dim * 4;
  if (bytes.size() != expected || (count > 0 && dim == 0)) throw bad();

  EmbeddingSet set;
  std::string table(reinterpret_cast<const char*>(bytes.data() + 20), table_len);
  if (!table.empty() && table.back() == '\n') table.pop_back();
  if (count > 0) {
    std::size_t start = 0;
    for (;;) {
      const auto nl = table.find('\n', start);
      set.ids.push_back(table.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  } else if (!table.empty()) {
    throw bad();
  }
  if (set.ids.size() != count) throw bad();

  set.matrix.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  std::size_t at = 20 + table_len;
  for (std::uint64_t r = 0; r < count; ++r) {
    for (std::uint64_t c = 0; c < dim; ++c, at += 4) {
      set.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = std::bit_cast<float>(u32(at));
    }
  }
  check_finite(set);
  {
    auto sorted = set.ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error("'" + origin + "': duplicate clip id in embedding file");
    }
  }
  sort_rows(set);
  return set;
}

inline void write_embeddings(const fs::path& path, const EmbeddingSet& set) {
  write_bytes(path, encode_emb1(set));
}

/// Parses an EMB1 file; rows come back in id order.
inline EmbeddingSet load_embeddings(const fs::path& path) {
  const auto bytes = wav_detail::read_file(path);
  return decode_emb1(bytes, path.string());
}

}  // namespace fadprof
