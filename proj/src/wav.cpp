/*
 * Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "inucleus/audio.hpp"
#include "inucleus/errors.hpp"

namespace inucleus {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t u32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

ParseError truncated(const std::string& what, std::size_t offset) {
  return ParseError("truncated WAV: " + what + " at byte offset " + std::to_string(offset));
}

struct Format {
  std::uint16_t code = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
};

double read_sample(const std::uint8_t* p, const Format& f) {
  if (f.code == kFormatFloat) return std::bit_cast<float>(u32(p));
  switch (f.bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(u16(p)) / 32768.0;
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(u32(p)) / 2147483648.0;
  }
}

void put16(std::vector<std::uint8_t>& o, std::uint16_t v) {
  o.push_back(v & 0xFF);
  o.push_back(v >> 8);
}
void put32(std::vector<std::uint8_t>& o, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) o.push_back((v >> (8 * i)) & 0xFF);
}

}  // namespace

Audio decode_wav(std::span<const std::uint8_t> bytes) {
  const std::size_t n = bytes.size();
  const std::uint8_t* b = bytes.data();
  if (n < 12) throw truncated("RIFF header", n);
  if (std::memcmp(b, "RIFF", 4) != 0 || std::memcmp(b + 8, "WAVE", 4) != 0) {
    throw ParseError("not a RIFF/WAVE file");
  }
  std::optional<Format> fmt;
  std::size_t pos = 12;
  while (pos < n) {
    if (n - pos < 8) throw truncated("chunk header", pos);
    const std::string id(reinterpret_cast<const char*>(b + pos), 4);
    const std::uint32_t size = u32(b + pos + 4);
    const std::size_t body = pos + 8;
    if (size > n - body) throw truncated("'" + id + "' chunk", body);
    if (id == "fmt ") {
      if (size < 16) throw ParseError("fmt chunk too short at byte offset " + std::to_string(body));
      Format f;
      f.code = u16(b + body);
      f.channels = u16(b + body + 2);
      f.rate = u32(b + body + 4);
      f.bits = u16(b + body + 14);
      if (f.code == kFormatExtensible) {
        if (size < 40) throw truncated("extensible fmt chunk", body + size);
        f.code = u16(b + body + 24);
      }
      const bool pcm = f.code == kFormatPcm &&
                       (f.bits == 8 || f.bits == 16 || f.bits == 24 || f.bits == 32);
      const bool flt = f.code == kFormatFloat && f.bits == 32;
      if (!pcm && !flt) {
        throw ParseError("unsupported encoding (format code " + std::to_string(f.code) + ", " +
                         std::to_string(f.bits) + " bits)");
      }
      if (f.channels == 0 || f.rate == 0) throw ParseError("fmt chunk has zero channels or rate");
      fmt = f;
    } else if (id == "data") {
      if (!fmt) throw ParseError("data chunk before fmt chunk at byte offset " + std::to_string(pos));
      const std::size_t width = fmt->bits / 8;
      const std::size_t frame = width * fmt->channels;
      if (size % frame != 0) throw truncated("partial sample frame in data chunk", body + size);
      Audio a;
      a.sample_rate = fmt->rate;
      a.samples.resize(size / frame);
      for (std::size_t i = 0; i < a.samples.size(); ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < fmt->channels; ++c) {
          sum += read_sample(b + body + i * frame + c * width, *fmt);
        }
        a.samples[i] = static_cast<float>(sum / fmt->channels);
      }
      return a;
    }
    pos = body + size + (size & 1);
  }
  throw ParseError(fmt ? "WAV file has no data chunk" : "WAV file has no fmt chunk");
}

Audio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(std::span<const float> samples, std::uint32_t sample_rate,
                                     unsigned bits_per_sample) {
  if (bits_per_sample != 16 && bits_per_sample != 32) {
    throw Error("encode_wav supports 16-bit PCM or 32-bit float");
  }
  const std::uint32_t width = bits_per_sample / 8;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * width);
  std::vector<std::uint8_t> o;
  o.reserve(44 + data_size);
  o.insert(o.end(), {'R', 'I', 'F', 'F'});
  put32(o, 36 + data_size);
  o.insert(o.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(o, 16);
  put16(o, bits_per_sample == 16 ? kFormatPcm : kFormatFloat);
  put16(o, 1);
  put32(o, sample_rate);
  put32(o, sample_rate * width);
  put16(o, static_cast<std::uint16_t>(width));
  put16(o, static_cast<std::uint16_t>(bits_per_sample));
  o.insert(o.end(), {'d', 'a', 't', 'a'});
  put32(o, data_size);
  for (float s : samples) {
    if (bits_per_sample == 32) {
      put32(o, std::bit_cast<std::uint32_t>(s));
    } else {
      const double v = std::clamp(static_cast<double>(s), -1.0, 1.0) * 32768.0;
      const auto q = static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
      put16(o, static_cast<std::uint16_t>(q));
    }
  }
  return o;
}

void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               std::uint32_t sample_rate, unsigned bits_per_sample) {
  const auto bytes = encode_wav(samples, sample_rate, bits_per_sample);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace inucleus
