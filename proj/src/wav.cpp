// Copyright 2026 The ovc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ovc/wav.hpp"

#include "ovc/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ovc {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

struct Layout {
  WavInfo info;
  std::uint16_t format = 0;
  std::streamoff data_offset = 0;
  std::uint32_t data_bytes = 0;
};

Layout parse_header(std::ifstream& in, const std::filesystem::path& path) {
  auto fail = [&](const std::string& why) {
    return IngestionError(path.string() + ": " + why);
  };
  std::array<unsigned char, 12> riff{};
  if (!in.read(reinterpret_cast<char*>(riff.data()), riff.size()))
    throw fail("file too short for a RIFF header");
  if (std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  Layout l;
  bool have_fmt = false;
  std::array<unsigned char, 8> chunk{};
  while (in.read(reinterpret_cast<char*>(chunk.data()), chunk.size())) {
    std::uint32_t size = le32(chunk.data() + 4);
    if (std::memcmp(chunk.data(), "fmt ", 4) == 0) {
      if (size < 16) throw fail("fmt chunk too small");
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size)) throw fail("truncated fmt chunk");
      l.format = le16(fmt.data());
      l.info.channels = le16(fmt.data() + 2);
      l.info.sample_rate = static_cast<int>(le32(fmt.data() + 4));
      l.info.bits_per_sample = le16(fmt.data() + 14);
      if (l.format == kFormatExtensible) {
        if (size < 26) throw fail("extensible fmt chunk too small");
        l.format = le16(fmt.data() + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk.data(), "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      l.data_offset = in.tellg();
      l.data_bytes = size;
      break;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
    if (size & 1 && std::memcmp(chunk.data(), "fmt ", 4) == 0) in.seekg(1, std::ios::cur);
  }
  if (!have_fmt || l.data_offset == 0) throw fail("missing fmt or data chunk");
  if (l.info.channels < 1 || l.info.sample_rate < 1) throw fail("invalid channel count or rate");
  const bool pcm_ok = l.format == kFormatPcm &&
                      (l.info.bits_per_sample == 16 || l.info.bits_per_sample == 24 ||
                       l.info.bits_per_sample == 32);
  const bool float_ok = l.format == kFormatFloat && l.info.bits_per_sample == 32;
  if (!pcm_ok && !float_ok)
    throw fail("unsupported encoding (format " + std::to_string(l.format) + ", " +
               std::to_string(l.info.bits_per_sample) + " bits)");
  const std::size_t frame_bytes =
      static_cast<std::size_t>(l.info.channels) * (l.info.bits_per_sample / 8);
  l.info.frames = l.data_bytes / frame_bytes;
  return l;
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  return parse_header(in, path).info;
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  Layout l = parse_header(in, path);
  const int bytes = l.info.bits_per_sample / 8;
  const std::size_t frame_bytes = static_cast<std::size_t>(l.info.channels) * bytes;

  std::vector<unsigned char> raw(l.info.frames * frame_bytes);
  in.seekg(l.data_offset);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  const std::size_t got = static_cast<std::size_t>(in.gcount()) / frame_bytes;

  Waveform w;
  w.sample_rate = l.info.sample_rate;
  w.samples.resize(got);
  for (std::size_t i = 0; i < got; ++i) {
    const unsigned char* p = raw.data() + i * frame_bytes;
    double v = 0.0;
    if (l.format == kFormatFloat) {
      float f;
      std::uint32_t u = le32(p);
      std::memcpy(&f, &u, sizeof f);
      v = f;
    } else if (bytes == 2) {
      v = static_cast<std::int16_t>(le16(p)) / 32768.0;
    } else if (bytes == 3) {
      std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
      if (s & 0x800000) s |= ~0xFFFFFF;
      v = s / 8388608.0;
    } else {
      v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
    }
    w.samples[i] = v;
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  auto put32 = [&](std::uint32_t v) {
    char b[4] = {char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF), char(v >> 24)};
    out.write(b, 4);
  };
  auto put16 = [&](std::uint16_t v) {
    char b[2] = {char(v & 0xFF), char(v >> 8)};
    out.write(b, 2);
  };
  out.write("RIFF", 4);
  put32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(16);
  put16(kFormatPcm);
  put16(1);
  put32(static_cast<std::uint32_t>(w.sample_rate));
  put32(static_cast<std::uint32_t>(w.sample_rate) * 2);
  put16(2);
  put16(16);
  out.write("data", 4);
  put32(data_bytes);
  for (double s : w.samples) {
    double c = std::clamp(s, -1.0, 1.0);
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
  }
  if (!out) throw IngestionError("short write to " + path.string());
}

}  // namespace ovc
