// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// RIFF/WAVE reader and writer restricted to 16-bit PCM, mono, 16 kHz.
// Samples map to [-1, 1) as s / 32768; writing scales by 32768, rounds to
// nearest and saturates to [-32768, 32767].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/dsp/stft.hpp"

namespace tscn::pipeline {

namespace detail {

inline std::uint32_t ReadU32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t ReadU16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void PutU32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void PutU16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace detail

inline constexpr std::uint16_t kWavFormatPcm = 1;
inline constexpr std::uint16_t kWavFormatExtensible = 0xFFFE;

inline std::int16_t ToPcm16(double x) {
  const double s = std::nearbyint(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0));
}

template <class Real = float>
dsp::Wave<Real> DecodeWav(std::span<const std::uint8_t> bytes, const std::string& name = "wav") {
  using detail::ReadU16;
  using detail::ReadU32;
  const auto malformed = [&](const std::string& why) {
    Fail(ErrorKind::kWavMalformed, name + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    malformed("not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) malformed("short fmt chunk");
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      if (format == kWavFormatExtensible && size >= 40) {
        format = ReadU16(bytes.data() + body + 24);  // sub-format GUID prefix
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) malformed("data chunk before fmt chunk");
      if (format != kWavFormatPcm) {
        malformed("unsupported format tag " + std::to_string(format) + " (PCM only)");
      }
      Require(channels == 1, ErrorKind::kWavChannels,
              name + ": expected mono, got " + std::to_string(channels) + " channels");
      Require(rate == static_cast<std::uint32_t>(dsp::kSampleRate), ErrorKind::kWavSampleRate,
              name + ": expected 16000 Hz, got " + std::to_string(rate));
      Require(bits == 16, ErrorKind::kWavBitDepth,
              name + ": expected 16-bit samples, got " + std::to_string(bits));
      if (body + size > bytes.size()) malformed("data chunk runs past end of file");
      if (size % 2 != 0) malformed("odd data chunk size");
      dsp::Wave<Real> wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.samples.resize(size / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        const auto s = static_cast<std::int16_t>(ReadU16(bytes.data() + body + 2 * i));
        wave.samples[i] = static_cast<Real>(s / 32768.0);
      }
      return wave;
    }
    pos = body + size + (size & 1u);
  }
  malformed(have_fmt ? "missing data chunk" : "missing fmt chunk");
  return {};
}

template <class Real>
std::vector<std::uint8_t> EncodeWav(const dsp::Wave<Real>& wave) {
  Require(wave.sample_rate == dsp::kSampleRate, ErrorKind::kWavSampleRate,
          "can only write 16000 Hz audio");
  const auto data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::vector<std::uint8_t> b;
  b.reserve(44 + data_bytes);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  detail::PutU32(b, 36 + data_bytes);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::PutU32(b, 16);
  detail::PutU16(b, kWavFormatPcm);
  detail::PutU16(b, 1);
  detail::PutU32(b, dsp::kSampleRate);
  detail::PutU32(b, dsp::kSampleRate * 2);
  detail::PutU16(b, 2);
  detail::PutU16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  detail::PutU32(b, data_bytes);
  for (Real x : wave.samples) {
    const auto s = static_cast<std::uint16_t>(ToPcm16(static_cast<double>(x)));
    detail::PutU16(b, s);
  }
  return b;
}

template <class Real = float>
dsp::Wave<Real> ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return DecodeWav<Real>(bytes, path);
}

template <class Real>
void WriteWav(const std::string& path, const dsp::Wave<Real>& wave) {
  const auto bytes = EncodeWav(wave);
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), ErrorKind::kIo, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<bool>(out), ErrorKind::kIo, "write failed for '" + path + "'");
}

}  // namespace tscn::pipeline
