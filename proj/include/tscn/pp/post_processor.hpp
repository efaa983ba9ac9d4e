// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Statistical post-processing of the network output, one frame at a time:
//
//   spp    = clamp(|enhanced| / |noisy|, 0, 1)
//   power  = cepstral_preprocess(|enhanced|^2)     harmonics notched
//   npsd   = a * npsd + (1 - a) * power,  a = alpha_d + (1 - alpha_d) * spp
//   gamma  = |enhanced|^2 / npsd
//   xi     = beta * G_prev^2 * gamma_prev + (1 - beta) * max(gamma - 1, 0)
//   G      = xi / (1 + xi) * exp(E1(xi gamma / (1 + xi)) / 2)   in [gain_min, 1]
//   out    = G * enhanced
//
// All arithmetic is double precision regardless of the spectrum type.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/dsp/fft.hpp"
#include "tscn/pp/expint.hpp"

namespace tscn::pp {

inline constexpr std::size_t kBins = 161;

struct PpConfig {
  double alpha_d = 0.85;                  // noise-PSD smoothing base
  double beta_dd = 0.98;                  // decision-directed weight
  double xi_min = 0.0031622776601683794;  // 10^-2.5
  double gain_min = 0.1;
  std::size_t quefrency_min = 40;  // samples; 400 Hz pitch
  std::size_t quefrency_max = 160;  // 100 Hz pitch
  std::size_t notch_halfwidth = 2;
  double peak_ratio = 3.0;   // peak vs median |cepstrum| over the search range
  double peak_floor = 0.4;   // absolute cepstral peak floor
  double power_floor = 1e-12;
  double spp_epsilon = 1e-12;

  void Validate() const {
    Require(alpha_d > 0 && alpha_d < 1, ErrorKind::kInvalidArgument, "alpha_d must be in (0,1)");
    Require(beta_dd > 0 && beta_dd < 1, ErrorKind::kInvalidArgument, "beta_dd must be in (0,1)");
    Require(xi_min > 0, ErrorKind::kInvalidArgument, "xi_min must be > 0");
    Require(gain_min > 0 && gain_min <= 1, ErrorKind::kInvalidArgument,
            "gain_min must be in (0,1]");
    Require(quefrency_min >= 1 && quefrency_min <= quefrency_max, ErrorKind::kInvalidArgument,
            "bad quefrency range");
    Require(peak_ratio > 0 && peak_floor >= 0, ErrorKind::kInvalidArgument,
            "bad cepstral peak threshold");
    Require(power_floor > 0 && spp_epsilon > 0, ErrorKind::kInvalidArgument,
            "floors must be > 0");
  }
};

struct PpState {
  std::vector<double> npsd;  // empty until the first frame
  std::vector<double> prev_gain;
  std::vector<double> prev_gamma;
  std::size_t frame_index = 0;

  explicit PpState(std::size_t bins = kBins)
      : prev_gain(bins, 1.0), prev_gamma(bins, 1.0) {}

  std::size_t bins() const noexcept { return prev_gain.size(); }
};

inline std::vector<double> DeriveSpp(std::span<const double> enhanced_mag,
                                     std::span<const double> noisy_mag, double eps = 1e-12) {
  Require(enhanced_mag.size() == noisy_mag.size(), ErrorKind::kShapeMismatch,
          "spp magnitude vectors differ in length");
  std::vector<double> spp(enhanced_mag.size());
  for (std::size_t k = 0; k < spp.size(); ++k) {
    spp[k] = std::clamp(enhanced_mag[k] / (noisy_mag[k] + eps), 0.0, 1.0);
  }
  return spp;
}

struct CepstralPeak {
  bool detected = false;
  std::size_t quefrency = 0;
  double peak = 0;
  double median = 0;
};

// Real cepstrum of the log power spectrum (even extension to 2 (bins - 1)
// points). When a pitch peak is detected in the quefrency search range, the
// peak and its rahmonics (+- notch_halfwidth, mirrored) are zeroed before
// returning to the power domain. Otherwise the floored input is returned
// unchanged.
class CepstralPreprocessor {
 public:
  explicit CepstralPreprocessor(const PpConfig& cfg = {}, std::size_t bins = kBins)
      : cfg_(cfg), n_(2 * (bins - 1)), fft_(n_), spec_(bins), cep_(n_) {
    cfg_.Validate();
    Require(bins >= 2, ErrorKind::kInvalidArgument, "cepstrum needs at least two bins");
  }

  std::vector<double> Apply(std::span<const double> power) {
    const std::size_t bins = spec_.size();
    Require(power.size() == bins, ErrorKind::kShapeMismatch,
            "power frame has " + std::to_string(power.size()) + " bins, expected " +
                std::to_string(bins));
    std::vector<double> out(bins);
    for (std::size_t k = 0; k < bins; ++k) out[k] = std::max(power[k], cfg_.power_floor);
    for (std::size_t k = 0; k < bins; ++k) spec_[k] = {std::log(out[k]), 0.0};
    fft_.Inverse(spec_, cep_);
    last_ = Detect();
    if (!last_.detected) return out;
    const std::size_t half = n_ / 2;
    const std::size_t hw = cfg_.notch_halfwidth;
    for (std::size_t q = last_.quefrency; q <= half; q += last_.quefrency) {
      const std::size_t lo = q > hw ? q - hw : 1;
      const std::size_t hi = std::min(q + hw, half);
      for (std::size_t j = lo; j <= hi; ++j) {
        cep_[j] = 0.0;
        cep_[n_ - j] = 0.0;
      }
    }
    fft_.Forward(cep_, spec_);
    for (std::size_t k = 0; k < bins; ++k) out[k] = std::exp(spec_[k].real());
    return out;
  }

  const CepstralPeak& last_peak() const noexcept { return last_; }

 private:
  CepstralPeak Detect() {
    CepstralPeak p;
    const std::size_t lo = cfg_.quefrency_min;
    const std::size_t hi = std::min(cfg_.quefrency_max, n_ / 2);
    if (lo > hi) return p;
    std::vector<double> mags;
    mags.reserve(hi - lo + 1);
    p.peak = -std::numeric_limits<double>::infinity();
    for (std::size_t q = lo; q <= hi; ++q) {
      mags.push_back(std::abs(cep_[q]));
      if (cep_[q] > p.peak) {
        p.peak = cep_[q];
        p.quefrency = q;
      }
    }
    auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    p.median = *mid;
    p.detected = p.peak > cfg_.peak_ratio * p.median && p.peak > cfg_.peak_floor;
    return p;
  }

  PpConfig cfg_;
  std::size_t n_;
  dsp::RealFft<double> fft_;
  std::vector<std::complex<double>> spec_;
  std::vector<double> cep_;
  CepstralPeak last_;
};

inline std::vector<double> CepstralPreprocess(std::span<const double> power,
                                              const PpConfig& cfg = {}) {
  CepstralPreprocessor pre(cfg, power.size());
  return pre.Apply(power);
}

// First call seeds the estimate with the part of `power` the SPP attributes
// to noise, (1 - spp) * power; later calls run the SPP-weighted recursion.
inline void UpdateNpsd(PpState& st, std::span<const double> power, std::span<const double> spp,
                       const PpConfig& cfg = {}) {
  Require(power.size() == st.bins() && spp.size() == st.bins(), ErrorKind::kShapeMismatch,
          "npsd update size mismatch");
  if (st.npsd.empty()) {
    st.npsd.resize(st.bins());
    for (std::size_t k = 0; k < st.bins(); ++k) {
      st.npsd[k] = std::max((1.0 - spp[k]) * power[k], cfg.power_floor);
    }
    return;
  }
  for (std::size_t k = 0; k < st.bins(); ++k) {
    const double a = cfg.alpha_d + (1.0 - cfg.alpha_d) * spp[k];
    const double next = a * st.npsd[k] + (1.0 - a) * power[k];
    st.npsd[k] = std::max(next, cfg.power_floor);
  }
}

// MMSE log-spectral amplitude gain, clamped to [gain_min, 1].
inline double LsaGain(double xi, double gamma, const PpConfig& cfg = {}) {
  const double r = xi / (1.0 + xi);
  const double v = std::max(r * gamma, std::numeric_limits<double>::min());
  const double g = r * std::exp(0.5 * ExpintE1(v));
  return std::clamp(g, cfg.gain_min, 1.0);
}

inline std::vector<double> LsaGain(std::span<const double> xi, std::span<const double> gamma,
                                   const PpConfig& cfg = {}) {
  Require(xi.size() == gamma.size(), ErrorKind::kShapeMismatch, "lsa gain size mismatch");
  std::vector<double> g(xi.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = LsaGain(xi[k], gamma[k], cfg);
  return g;
}

// Per-stream post-processor. Frames must be pushed in order.
class PostProcessor {
 public:
  explicit PostProcessor(const PpConfig& cfg = {}, std::size_t bins = kBins)
      : cfg_(cfg), state_(bins), cepstral_(cfg, bins), power_(bins), gamma_(bins), xi_(bins),
        gain_(bins) {}

  const PpConfig& config() const noexcept { return cfg_; }
  const PpState& state() const noexcept { return state_; }
  PpState& state() noexcept { return state_; }
  std::span<const double> last_gain() const noexcept { return gain_; }

  // SPP derived from |enhanced| / |noisy|.
  template <class Real>
  void Process(std::span<const std::complex<Real>> enhanced,
               std::span<const std::complex<Real>> noisy, std::span<std::complex<Real>> out) {
    const std::size_t b = state_.bins();
    Require(noisy.size() == b, ErrorKind::kShapeMismatch, "pp noisy frame size");
    std::vector<double> em(b), nm(b);
    for (std::size_t k = 0; k < b; ++k) {
      em[k] = std::abs(std::complex<double>(enhanced[k]));
      nm[k] = std::abs(std::complex<double>(noisy[k]));
    }
    const auto spp = DeriveSpp(em, nm, cfg_.spp_epsilon);
    ProcessWithSpp(enhanced, std::span<const double>(spp), out);
  }

  template <class Real>
  void ProcessWithSpp(std::span<const std::complex<Real>> enhanced, std::span<const double> spp,
                      std::span<std::complex<Real>> out) {
    const std::size_t b = state_.bins();
    Require(enhanced.size() == b && spp.size() == b && out.size() == b,
            ErrorKind::kShapeMismatch, "pp frame size");
    for (std::size_t k = 0; k < b; ++k) power_[k] = std::norm(std::complex<double>(enhanced[k]));
    const auto pre = cepstral_.Apply(power_);
    UpdateNpsd(state_, pre, spp, cfg_);
    for (std::size_t k = 0; k < b; ++k) {
      gamma_[k] = power_[k] / std::max(state_.npsd[k], cfg_.power_floor);
      const double dd = cfg_.beta_dd * state_.prev_gain[k] * state_.prev_gain[k] *
                            state_.prev_gamma[k] +
                        (1.0 - cfg_.beta_dd) * std::max(gamma_[k] - 1.0, 0.0);
      xi_[k] = std::max(dd, cfg_.xi_min);
      gain_[k] = LsaGain(xi_[k], gamma_[k], cfg_);
      out[k] = enhanced[k] * static_cast<Real>(gain_[k]);
    }
    state_.prev_gain = gain_;
    state_.prev_gamma = gamma_;
    ++state_.frame_index;
  }

  const CepstralPeak& last_peak() const noexcept { return cepstral_.last_peak(); }

 private:
  PpConfig cfg_;
  PpState state_;
  CepstralPreprocessor cepstral_;
  std::vector<double> power_, gamma_, xi_, gain_;
};

}  // namespace tscn::pp
