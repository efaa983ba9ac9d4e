// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "tscn/core/error.hpp"
#include "tscn/dsp/stft.hpp"

namespace tscn::pipeline {

template <class Real>
double MeanPower(std::span<const Real> x) {
  double p = 0;
  for (Real v : x) p += static_cast<double>(v) * v;
  return x.empty() ? 0.0 : p / static_cast<double>(x.size());
}

// Gain applied to the noise (truncated to the clean length) so that
// 10 log10(P_clean / P_noise) equals snr_db.
template <class Real>
double NoiseGainForSnr(const dsp::Wave<Real>& clean, const dsp::Wave<Real>& noise,
                       double snr_db) {
  Require(std::isfinite(snr_db), ErrorKind::kInvalidArgument, "snr must be finite");
  Require(noise.size() >= clean.size(), ErrorKind::kInvalidArgument,
          "noise (" + std::to_string(noise.size()) + " samples) shorter than clean (" +
              std::to_string(clean.size()) + ")");
  const double pc = MeanPower<Real>(clean.samples);
  const double pn = MeanPower<Real>(std::span<const Real>(noise.samples).first(clean.size()));
  Require(pc > 0, ErrorKind::kInvalidArgument, "clean signal has zero power");
  Require(pn > 0, ErrorKind::kInvalidArgument, "noise has zero power");
  return std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
}

template <class Real>
dsp::Wave<Real> MixAtSnr(const dsp::Wave<Real>& clean, const dsp::Wave<Real>& noise,
                         double snr_db) {
  Require(clean.sample_rate == noise.sample_rate, ErrorKind::kWavSampleRate,
          "clean and noise sample rates differ");
  const double g = NoiseGainForSnr(clean, noise, snr_db);
  dsp::Wave<Real> out;
  out.sample_rate = clean.sample_rate;
  out.samples.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    out.samples[i] = static_cast<Real>(clean.samples[i] + g * noise.samples[i]);
  }
  return out;
}

}  // namespace tscn::pipeline
