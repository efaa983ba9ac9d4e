// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Weight-file layout (all integers little-endian):
//
//   "TSCNW1"                 6-byte magic
//   u32 header_len           byte length of the JSON header
//   header                   JSON array of
//                            {name, shape, dtype: "f32", offset, length}
//                            offset/length in bytes, relative to the payload
//   payload                  concatenated IEEE-754 binary32 blobs
//   u32 crc32                CRC-32 (zlib polynomial) of the payload bytes

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tscn/core/error.hpp"
#include "tscn/nn/params.hpp"

namespace tscn::nn {

inline constexpr std::string_view kWeightMagic = "TSCNW1";

namespace detail {

inline void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t GetU32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint32_t Crc32(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

inline std::vector<std::uint8_t> EncodeWeights(const ParamStore& store) {
  nlohmann::json header = nlohmann::json::array();
  std::vector<std::uint8_t> payload;
  for (const auto& [name, t] : store) {
    const std::size_t offset = payload.size();
    for (float v : t.data()) detail::PutU32(payload, std::bit_cast<std::uint32_t>(v));
    header.push_back({{"name", name},
                      {"shape", t.shape()},
                      {"dtype", "f32"},
                      {"offset", offset},
                      {"length", payload.size() - offset}});
  }
  const std::string header_text = header.dump();
  std::vector<std::uint8_t> out(kWeightMagic.begin(), kWeightMagic.end());
  detail::PutU32(out, static_cast<std::uint32_t>(header_text.size()));
  out.insert(out.end(), header_text.begin(), header_text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  detail::PutU32(out, detail::Crc32(payload.data(), payload.size()));
  return out;
}

// Parses a whole weight image; nothing is returned unless every check passes.
inline ParamStore DecodeWeights(const std::vector<std::uint8_t>& bytes,
                                const ParamLayout* layout = nullptr) {
  const std::size_t magic_len = kWeightMagic.size();
  Require(bytes.size() >= magic_len, ErrorKind::kWeightTruncated,
          "file shorter than magic");
  Require(std::memcmp(bytes.data(), kWeightMagic.data(), magic_len) == 0,
          ErrorKind::kWeightMagic, "expected \"TSCNW1\"");
  Require(bytes.size() >= magic_len + 4, ErrorKind::kWeightTruncated,
          "missing header length");
  const std::size_t header_len = detail::GetU32(bytes.data() + magic_len);
  const std::size_t header_begin = magic_len + 4;
  Require(bytes.size() >= header_begin + header_len + 4,
          ErrorKind::kWeightTruncated, "header or checksum cut short");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + header_begin,
                                   bytes.begin() + header_begin + header_len);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kWeightHeader, e.what());
  }
  Require(header.is_array(), ErrorKind::kWeightHeader, "header is not an array");

  const std::size_t payload_begin = header_begin + header_len;
  const std::size_t payload_len = bytes.size() - payload_begin - 4;

  struct Entry {
    std::string name;
    Shape shape;
    std::size_t offset;
    std::size_t length;
  };
  std::vector<Entry> entries;
  std::size_t needed = 0;
  try {
    for (const auto& item : header) {
      Entry e{item.at("name").get<std::string>(),
              item.at("shape").get<Shape>(), item.at("offset").get<std::size_t>(),
              item.at("length").get<std::size_t>()};
      Require(item.at("dtype").get<std::string>() == "f32",
              ErrorKind::kWeightHeader, "unsupported dtype for '" + e.name + "'");
      Require(e.length == 4 * NumElements(e.shape), ErrorKind::kWeightHeader,
              "length of '" + e.name + "' disagrees with its shape");
      needed = std::max(needed, e.offset + e.length);
      entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kWeightHeader, e.what());
  }
  Require(payload_len >= needed, ErrorKind::kWeightTruncated,
          "payload holds " + std::to_string(payload_len) + " bytes, header needs " +
              std::to_string(needed));
  Require(payload_len == needed, ErrorKind::kWeightHeader,
          "trailing bytes after payload");

  const std::uint8_t* payload = bytes.data() + payload_begin;
  const std::uint32_t stored_crc = detail::GetU32(payload + payload_len);
  Require(stored_crc == detail::Crc32(payload, payload_len),
          ErrorKind::kWeightChecksum, "payload crc32 does not match");

  ParamStore store;
  for (auto& e : entries) {
    std::vector<float> data(NumElements(e.shape));
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = std::bit_cast<float>(detail::GetU32(payload + e.offset + 4 * i));
    }
    store.Add(std::move(e.name), Tensor<float>(std::move(e.shape), std::move(data)));
  }
  if (layout) ValidateAgainst(store, *layout);
  return store;
}

inline void SaveParams(const std::string& path, const ParamStore& store) {
  const auto bytes = EncodeWeights(store);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(os), ErrorKind::kIo, "cannot open '" + path + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<bool>(os), ErrorKind::kIo, "write to '" + path + "' failed");
}

inline ParamStore LoadParams(const std::string& path,
                             const ParamLayout* layout = nullptr) {
  std::ifstream is(path, std::ios::binary);
  Require(static_cast<bool>(is), ErrorKind::kIo, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return DecodeWeights(bytes, layout);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace tscn::nn
