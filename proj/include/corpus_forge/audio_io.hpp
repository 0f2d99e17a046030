// Copyright 2026 corpus-forge authors
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

// RIFF/WAVE PCM header parsing, duration arithmetic and bit-exact
// concatenation. Integer PCM only; compressed sources must be
// transcoded upstream. No resampling: a mixed-rate session is an error,
// never a silent conversion, because the duration bookkeeping feeds the
// filtering rules.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "corpus_forge/errors.hpp"

namespace corpus_forge {

struct AudioMeta {
  std::uint32_t sample_rate_hz = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits_per_sample = 0;
  std::uint64_t num_frames = 0;

  double duration_s() const {
    return static_cast<double>(num_frames) / static_cast<double>(sample_rate_hz);
  }
  std::uint32_t bytes_per_frame() const {
    return channels * (bits_per_sample / 8u);
  }
  bool compatible_with(const AudioMeta& o) const {
    return sample_rate_hz == o.sample_rate_hz && channels == o.channels &&
           bits_per_sample == o.bits_per_sample;
  }
  std::string format_string() const {
    return std::to_string(sample_rate_hz) + " Hz/" + std::to_string(channels) +
           " ch/" + std::to_string(bits_per_sample) + " bit";
  }
};

namespace detail {

struct WavLayout {
  AudioMeta meta;
  std::uint64_t data_offset = 0;
  std::uint64_t data_size = 0;
};

inline std::uint16_t read_u16le(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t read_u32le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline void put_u16le(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}
inline void put_u32le(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
  p[2] = static_cast<std::uint8_t>(v >> 16);
  p[3] = static_cast<std::uint8_t>(v >> 24);
}

inline WavLayout parse_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  f.seekg(0, std::ios::end);
  const std::uint64_t file_size = static_cast<std::uint64_t>(f.tellg());
  f.seekg(0);

  auto fail = [&](const std::string& what) -> void {
    throw UnsupportedFormatError(path.string() + ": " + what);
  };

  std::uint8_t head[12];
  if (!f.read(reinterpret_cast<char*>(head), 12)) fail("file too short for a RIFF header");
  if (std::memcmp(head, "RIFX", 4) == 0) fail("big-endian RIFX is not supported");
  if (std::memcmp(head, "RIFF", 4) != 0) fail("not a RIFF file");
  if (std::memcmp(head + 8, "WAVE", 4) != 0) fail("RIFF form is not WAVE");

  WavLayout out;
  bool have_fmt = false, have_data = false;
  std::uint16_t format_code = 0, block_align = 0;
  std::uint64_t pos = 12;
  while (pos + 8 <= file_size) {
    f.seekg(static_cast<std::streamoff>(pos));
    std::uint8_t chunk[8];
    if (!f.read(reinterpret_cast<char*>(chunk), 8)) fail("truncated chunk header");
    std::uint32_t size = read_u32le(chunk + 4);
    std::uint64_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail("fmt chunk too small");
      if (body + 16 > file_size) fail("truncated fmt chunk");
      std::uint8_t fmt[16];
      if (!f.read(reinterpret_cast<char*>(fmt), 16)) fail("truncated fmt chunk");
      format_code = read_u16le(fmt);
      out.meta.channels = read_u16le(fmt + 2);
      out.meta.sample_rate_hz = read_u32le(fmt + 4);
      block_align = read_u16le(fmt + 12);
      out.meta.bits_per_sample = read_u16le(fmt + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      out.data_offset = body;
      out.data_size = size;
      have_data = true;
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }
  if (!have_fmt) fail("missing fmt chunk");
  if (!have_data) fail("missing data chunk");
  if (format_code != 1)
    fail("non-PCM format code " + std::to_string(format_code));
  if (out.meta.channels == 0) fail("zero channels");
  if (out.meta.sample_rate_hz == 0) fail("zero sample rate");
  if (out.meta.bits_per_sample != 8 && out.meta.bits_per_sample != 16 &&
      out.meta.bits_per_sample != 24 && out.meta.bits_per_sample != 32)
    fail("unsupported sample width " + std::to_string(out.meta.bits_per_sample));
  if (block_align != out.meta.bytes_per_frame())
    fail("block align " + std::to_string(block_align) + " inconsistent with " +
         std::to_string(out.meta.bytes_per_frame()) + " bytes per frame");
  if (out.data_offset + out.data_size > file_size) fail("truncated data payload");
  if (out.data_size % out.meta.bytes_per_frame() != 0)
    fail("data size is not a whole number of frames");
  out.meta.num_frames = out.data_size / out.meta.bytes_per_frame();
  return out;
}

inline void write_wav_header(std::ofstream& f, const AudioMeta& meta,
                             std::uint32_t data_bytes) {
  std::uint8_t h[44];
  std::memcpy(h, "RIFF", 4);
  put_u32le(h + 4, 36 + data_bytes);
  std::memcpy(h + 8, "WAVE", 4);
  std::memcpy(h + 12, "fmt ", 4);
  put_u32le(h + 16, 16);
  put_u16le(h + 20, 1);  // integer PCM
  put_u16le(h + 22, meta.channels);
  put_u32le(h + 24, meta.sample_rate_hz);
  put_u32le(h + 28, meta.sample_rate_hz * meta.bytes_per_frame());
  put_u16le(h + 32, static_cast<std::uint16_t>(meta.bytes_per_frame()));
  put_u16le(h + 34, meta.bits_per_sample);
  std::memcpy(h + 36, "data", 4);
  put_u32le(h + 40, data_bytes);
  f.write(reinterpret_cast<const char*>(h), 44);
}

}  // namespace detail

/// Parses the RIFF/WAVE header without touching the payload.
inline AudioMeta probe(const std::filesystem::path& path) {
  return detail::parse_wav(path).meta;
}

/// Writes a canonical 44-byte-header PCM WAV.
inline AudioMeta write_pcm_wav(const std::filesystem::path& path,
                               std::uint32_t sample_rate_hz, std::uint16_t channels,
                               std::uint16_t bits_per_sample,
                               std::span<const std::uint8_t> payload) {
  AudioMeta meta{sample_rate_hz, channels, bits_per_sample, 0};
  if (meta.bytes_per_frame() == 0 || payload.size() % meta.bytes_per_frame() != 0)
    throw Error("write_pcm_wav: payload is not a whole number of frames");
  meta.num_frames = payload.size() / meta.bytes_per_frame();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  detail::write_wav_header(f, meta, static_cast<std::uint32_t>(payload.size()));
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (!f) throw IoError("short write to " + path.string());
  return meta;
}

/// Concatenates compatible PCM files; the output payload is the
/// byte-wise concatenation of the input payloads, so frame counts add
/// exactly. Throws FormatMismatchError naming the offending pair.
inline AudioMeta concat(std::span<const std::filesystem::path> inputs,
                        const std::filesystem::path& out_path) {
  if (inputs.empty()) throw Error("concat: no input files");
  std::vector<detail::WavLayout> layouts;
  layouts.reserve(inputs.size());
  for (const auto& p : inputs) layouts.push_back(detail::parse_wav(p));
  for (std::size_t i = 1; i < layouts.size(); ++i) {
    if (!layouts[0].meta.compatible_with(layouts[i].meta))
      throw FormatMismatchError(inputs[0].string() + " (" +
                                layouts[0].meta.format_string() + ") vs " +
                                inputs[i].string() + " (" +
                                layouts[i].meta.format_string() + ")");
  }
  std::uint64_t total_bytes = 0;
  for (const auto& l : layouts) total_bytes += l.data_size;
  if (total_bytes > 0xFFFFFFFFull - 36)
    throw Error("concat: output exceeds the 4 GiB WAV limit");

  AudioMeta meta = layouts[0].meta;
  meta.num_frames = total_bytes / meta.bytes_per_frame();
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path.string());
  detail::write_wav_header(out, meta, static_cast<std::uint32_t>(total_bytes));

  std::vector<char> buf(1 << 16);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::ifstream in(inputs[i], std::ios::binary);
    if (!in) throw IoError("cannot open " + inputs[i].string());
    in.seekg(static_cast<std::streamoff>(layouts[i].data_offset));
    std::uint64_t left = layouts[i].data_size;
    while (left > 0) {
      std::size_t take = static_cast<std::size_t>(
          std::min<std::uint64_t>(left, buf.size()));
      if (!in.read(buf.data(), static_cast<std::streamsize>(take)))
        throw IoError("short read from " + inputs[i].string());
      out.write(buf.data(), static_cast<std::streamsize>(take));
      left -= take;
    }
  }
  if (!out) throw IoError("short write to " + out_path.string());
  return meta;
}

}  // namespace corpus_forge
