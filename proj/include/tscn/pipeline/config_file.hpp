// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// key = value configuration text. '#' starts a comment; blank lines are
// ignored; keys are the EngineConfig / PpConfig field names.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "tscn/core/error.hpp"
#include "tscn/pipeline/engine.hpp"

namespace tscn::pipeline {

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T ParseNumber(const std::string& key, const std::string& v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  Require(res.ec == std::errc() && res.ptr == v.data() + v.size(), ErrorKind::kUsage,
          "config key '" + key + "': cannot parse '" + v + "'");
  return out;
}

inline bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  Fail(ErrorKind::kUsage, "config key '" + key + "': expected on/off, got '" + v + "'");
  return false;
}

}  // namespace detail

inline ConfigMap ParseConfigText(const std::string& text) {
  ConfigMap map;
  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = detail::Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    Require(eq != std::string_view::npos, ErrorKind::kUsage,
            "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::Trim(line.substr(0, eq)));
    const std::string value(detail::Trim(line.substr(eq + 1)));
    Require(!key.empty(), ErrorKind::kUsage,
            "config line " + std::to_string(line_no) + ": empty key");
    map[key] = value;
  }
  return map;
}

inline ConfigMap ReadConfigFile(const std::string& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfigText(ss.str());
}

inline void ApplyConfig(const ConfigMap& map, EngineConfig& cfg) {
  using detail::ParseBool;
  using detail::ParseNumber;
  auto& p = cfg.pp_config;
  for (const auto& [key, v] : map) {
    if (key == "weights" || key == "weights_path") {
      cfg.weights_path = v;
    } else if (key == "seed") {
      cfg.seed = ParseNumber<std::uint64_t>(key, v);
    } else if (key == "stage") {
      cfg.stage = ParseNumber<int>(key, v);
    } else if (key == "pp") {
      cfg.pp = ParseBool(key, v);
    } else if (key == "oracle_gain") {
      cfg.oracle_gain = v;
    } else if (key == "precision") {
      cfg.precision = ParsePrecision(v);
    } else if (key == "dump_spectra") {
      cfg.dump_spectra = v;
    } else if (key == "report_latency") {
      cfg.report_latency = ParseBool(key, v);
    } else if (key == "oracle_epsilon") {
      cfg.oracle_epsilon = ParseNumber<double>(key, v);
    } else if (key == "alpha_d") {
      p.alpha_d = ParseNumber<double>(key, v);
    } else if (key == "beta_dd") {
      p.beta_dd = ParseNumber<double>(key, v);
    } else if (key == "xi_min") {
      p.xi_min = ParseNumber<double>(key, v);
    } else if (key == "gain_min") {
      p.gain_min = ParseNumber<double>(key, v);
    } else if (key == "quefrency_min") {
      p.quefrency_min = ParseNumber<std::size_t>(key, v);
    } else if (key == "quefrency_max") {
      p.quefrency_max = ParseNumber<std::size_t>(key, v);
    } else if (key == "notch_halfwidth" || key == "cepstral_notch_halfwidth") {
      p.notch_halfwidth = ParseNumber<std::size_t>(key, v);
    } else if (key == "peak_ratio" || key == "peak_threshold") {
      p.peak_ratio = ParseNumber<double>(key, v);
    } else if (key == "peak_floor") {
      p.peak_floor = ParseNumber<double>(key, v);
    } else if (key == "power_floor") {
      p.power_floor = ParseNumber<double>(key, v);
    } else if (key == "spp_epsilon") {
      p.spp_epsilon = ParseNumber<double>(key, v);
    } else {
      Fail(ErrorKind::kUsage, "unknown config key '" + key + "'");
    }
  }
}

}  // namespace tscn::pipeline
