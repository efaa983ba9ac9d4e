// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Magnitude spectra as CSV: a header row with the bin centre frequencies in
// Hz, then one row per frame with 20 log10 |X| floored at -120 dB. Values
// are printed in shortest round-trip form.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/core/tensor.hpp"
#include "tscn/dsp/stft.hpp"

namespace tscn::pipeline {

inline constexpr double kDbFloor = -120.0;

inline double MagnitudeDb(double mag) {
  if (!(mag > 0)) return kDbFloor;
  return std::max(20.0 * std::log10(mag), kDbFloor);
}

namespace detail {

inline void PutNumber(std::ostream& os, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, res.ptr - buf);
}

}  // namespace detail

// Incremental writer so a stream can dump frames as they are produced.
class SpectraCsvWriter {
 public:
  SpectraCsvWriter(std::ostream& os, const dsp::StftConfig& cfg = {}) : os_(os), bins_(cfg.n_bins()) {
    for (std::size_t k = 0; k < bins_; ++k) {
      if (k) os_ << ',';
      detail::PutNumber(os_, cfg.bin_hz(k));
    }
    os_ << '\n';
  }

  template <class Real>
  void Write(std::span<const std::complex<Real>> frame) {
    Require(frame.size() == bins_, ErrorKind::kShapeMismatch, "spectra row size");
    for (std::size_t k = 0; k < bins_; ++k) {
      if (k) os_ << ',';
      detail::PutNumber(os_, MagnitudeDb(std::abs(std::complex<double>(frame[k]))));
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  std::size_t bins_;
};

template <class Real>
void DumpSpectra(std::ostream& os, const dsp::ComplexSpectrogram<Real>& spec,
                 const dsp::StftConfig& cfg = {}) {
  Require(spec.bins() == cfg.n_bins(), ErrorKind::kShapeMismatch, "spectrogram bin count");
  SpectraCsvWriter w(os, cfg);
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    const auto frame = spec.Frame(t);
    w.Write(std::span<const std::complex<Real>>(frame));
  }
}

template <class Real>
void DumpSpectra(const std::string& path, const dsp::ComplexSpectrogram<Real>& spec,
                 const dsp::StftConfig& cfg = {}) {
  std::ofstream os(path);
  Require(static_cast<bool>(os), ErrorKind::kIo, "cannot write '" + path + "'");
  DumpSpectra(os, spec, cfg);
  Require(static_cast<bool>(os), ErrorKind::kIo, "write failed for '" + path + "'");
}

struct SpectraTable {
  std::vector<double> freqs_hz;
  Matrix<double> db;  // frames x bins
};

inline SpectraTable ParseSpectraCsv(std::istream& is) {
  const auto parse_row = [](const std::string& line) {
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0;
      const auto res = std::from_chars(p, end, v);
      Require(res.ec == std::errc(), ErrorKind::kInvalidArgument, "bad number in spectra csv");
      row.push_back(v);
      p = res.ptr;
      if (p < end) {
        Require(*p == ',', ErrorKind::kInvalidArgument, "bad separator in spectra csv");
        ++p;
      }
    }
    return row;
  };
  SpectraTable t;
  std::string line;
  Require(static_cast<bool>(std::getline(is, line)), ErrorKind::kInvalidArgument,
          "empty spectra csv");
  t.freqs_hz = parse_row(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_row(line));
    Require(rows.back().size() == t.freqs_hz.size(), ErrorKind::kShapeMismatch,
            "spectra csv row width differs from header");
  }
  t.db = Matrix<double>(rows.size(), t.freqs_hz.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), t.db.row(r).begin());
  }
  return t;
}

}  // namespace tscn::pipeline
