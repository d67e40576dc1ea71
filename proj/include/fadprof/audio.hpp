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
#include <bit>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fadprof/error.hpp"
#include "fadprof/log.hpp"

namespace fadprof {

namespace fs = std::filesystem;

/// Canonical mono audio unit flowing through preprocessing and perturbation.
/// Samples are single precision so that what sits in memory is exactly what a
/// 32-bit float WAV in the workspace holds.
struct AudioClip {
  std::string id;
  std::vector<float> samples;
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

inline bool is_valid_clip_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  });
}

/// Maps a file stem onto the clip id alphabet; anything outside [A-Za-z0-9_-]
/// becomes '_'.
inline std::string sanitize_clip_id(std::string_view stem) {
  std::string id(stem);
  for (char& c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return id;
}

inline void validate_clip(const AudioClip& clip) {
  if (clip.samples.empty()) throw Error("clip '" + clip.id + "' has no samples");
  if (clip.sample_rate <= 0) throw Error("clip '" + clip.id + "' has invalid sample rate");
}

inline std::vector<double> to_double(std::span<const float> s) {
  return {s.begin(), s.end()};
}

inline std::vector<float> to_float(std::span<const double> s) {
  std::vector<float> out(s.size());
  std::transform(s.begin(), s.end(), out.begin(), [](double v) { return static_cast<float>(v); });
  return out;
}

// ---------------------------------------------------------------------------
// RIFF/WAVE

namespace wav_detail {

inline std::uint32_t u32le(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

inline std::uint16_t u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline std::string codec_name(std::uint16_t tag) {
  switch (tag) {
    case 0x0002: return "MS ADPCM";
    case 0x0006: return "A-law";
    case 0x0007: return "mu-law";
    case 0x0011: return "IMA ADPCM";
    case 0x0031: return "GSM 6.10";
    case 0x0050: return "MPEG";
    case 0x0055: return "MPEG Layer 3";
    case 0x00ff: return "AAC";
    default: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "format tag 0x%04x", tag);
      return buf;
    }
  }
}

inline std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace wav_detail

/// Decoded WAV payload, channels de-interleaved and downmixed to mono.
/// Integer PCM maps through division by 2^(bits-1); 8-bit data is unsigned
/// with a 128 offset.
inline AudioClip decode_wav(std::span<const unsigned char> bytes, std::string id,
                            const std::string& origin = "<memory>") {
  using namespace wav_detail;
  auto fail = [&](const std::string& what) { return Error("'" + origin + "': " + what); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }

  std::uint16_t tag = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::span<const unsigned char> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = u32le(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    const std::size_t len = std::min<std::size_t>(size, avail);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (len < 16) throw fail("truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      tag = u16le(f);
      channels = u16le(f + 2);
      rate = u32le(f + 4);
      block_align = u16le(f + 12);
      bits = u16le(f + 14);
      if (tag == 0xfffe) {
        if (len < 40) throw fail("truncated WAVE_FORMAT_EXTENSIBLE header");
        tag = u16le(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.subspan(body, len);
      have_data = true;
    }
    pos = body + size + (size & 1u);
    if (have_fmt && have_data) break;
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (!have_data) throw fail("missing data chunk");
  if (channels == 0) throw fail("zero channels");
  if (rate == 0) throw fail("zero sample rate");

  const bool is_pcm = tag == 0x0001;
  const bool is_float = tag == 0x0003;
  if (!is_pcm && !is_float) throw fail("unsupported codec: " + codec_name(tag));
  if (is_pcm && bits != 8 && bits != 16 && bits != 24 && bits != 32) {
    throw fail("unsupported codec: " + std::to_string(bits) + "-bit integer PCM");
  }
  if (is_float && bits != 32 && bits != 64) {
    throw fail("unsupported codec: " + std::to_string(bits) + "-bit float");
  }
  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes =
      block_align >= bytes_per_sample * channels ? block_align : bytes_per_sample * channels;
  const std::size_t frames = data.size() / frame_bytes;
  if (frames == 0) throw fail("no audio frames");

  auto sample_at = [&](const unsigned char* p) -> double {
    if (is_float) {
      if (bits == 32) return std::bit_cast<float>(u32le(p));
      std::uint64_t v = u32le(p) | (std::uint64_t(u32le(p + 4)) << 32);
      return std::bit_cast<double>(v);
    }
    switch (bits) {
      case 8: return (static_cast<int>(p[0]) - 128) / 128.0;
      case 16: return static_cast<std::int16_t>(u16le(p)) / 32768.0;
      case 24: {
        std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (v & 0x800000) v -= 0x1000000;
        return v / 8388608.0;
      }
      default: return static_cast<std::int32_t>(u32le(p)) / 2147483648.0;
    }
  };

  AudioClip clip;
  clip.id = std::move(id);
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* frame = data.data() + i * frame_bytes;
    if (channels == 1) {
      clip.samples[i] = static_cast<float>(sample_at(frame));
      continue;
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += sample_at(frame + c * bytes_per_sample);
    clip.samples[i] = static_cast<float>(acc / channels);
  }
  return clip;
}

inline AudioClip read_wav(const fs::path& path, std::string id) {
  const auto bytes = wav_detail::read_file(path);
  return decode_wav(bytes, std::move(id), path.string());
}

inline AudioClip read_wav(const fs::path& path) {
  return read_wav(path, sanitize_clip_id(path.stem().string()));
}

/// 32-bit IEEE float mono WAV image.
inline std::vector<unsigned char> encode_wav(const AudioClip& clip) {
  using namespace wav_detail;
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 4);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 0x0003);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 4);
  put_u16(out, 4);
  put_u16(out, 32);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (float s : clip.samples) put_u32(out, std::bit_cast<std::uint32_t>(s));
  return out;
}

inline void write_bytes(const fs::path& path, std::span<const unsigned char> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

inline void write_wav(const fs::path& path, const AudioClip& clip) {
  write_bytes(path, encode_wav(clip));
}

// ---------------------------------------------------------------------------
// Corpus

inline bool has_wav_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

/// Lists the corpus members: manifest entries (relative to root) when given,
/// otherwise every *.wav directly under root.
inline std::vector<fs::path> discover_corpus(const fs::path& root,
                                             const std::optional<fs::path>& manifest = {}) {
  std::vector<fs::path> files;
  if (manifest) {
    std::ifstream in(*manifest);
    if (!in) throw Error("cannot read manifest '" + manifest->string() + "'");
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      files.push_back(root / line);
    }
  } else {
    if (!fs::is_directory(root)) throw Error("corpus root '" + root.string() + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_regular_file() && has_wav_extension(entry.path())) files.push_back(entry.path());
    }
  }
  return files;
}

/// Loads and downmixes every corpus member. Clips come back ordered by id;
/// durations are untouched.
inline std::vector<AudioClip> load_corpus(const fs::path& root,
                                          const std::optional<fs::path>& manifest = {}) {
  std::map<std::string, fs::path> by_id;
  for (const auto& file : discover_corpus(root, manifest)) {
    std::string id = sanitize_clip_id(file.stem().string());
    auto [it, inserted] = by_id.emplace(id, file);
    if (!inserted) {
      throw Error("duplicate clip id '" + id + "' ('" + it->second.string() + "' and '" +
                  file.string() + "')");
    }
  }
  std::vector<AudioClip> clips;
  clips.reserve(by_id.size());
  for (const auto& [id, file] : by_id) clips.push_back(read_wav(file, id));
  return clips;
}

}  // namespace fadprof
