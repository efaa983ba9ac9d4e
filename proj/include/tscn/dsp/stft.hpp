// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Short-time Fourier analysis and overlap-add synthesis, in batch and causal
// streaming form. Conventions:
//   * periodic Hann window, w[n] = 0.5 - 0.5 cos(2 pi n / N);
//   * forward FFT unnormalized, inverse scaled by 1/N, so a frame's spectral
//     energy obeys sum_k |X_k|^2 c_k = N * sum_n (w[n] x[n])^2 with c_k the
//     one-sided bin multiplicity (1 for DC/Nyquist, 2 otherwise);
//   * synthesis reuses the analysis window and divides every output sample by
//     the accumulated squared-window sum (floored at kWindowSumFloor).
// Batch analysis is implemented on top of the streaming analyzer, so both
// produce bit-identical frames.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/core/tensor.hpp"
#include "tscn/dsp/fft.hpp"

namespace tscn::dsp {

inline constexpr int kSampleRate = 16000;

struct StftConfig {
  std::size_t win_len = 320;   // 20 ms
  std::size_t hop = 160;       // 10 ms
  std::size_t fft_size = 320;
  int sample_rate = kSampleRate;

  std::size_t n_bins() const noexcept { return fft_size / 2 + 1; }

  // Window length plus hop: the latency inherent to the framing.
  std::size_t algorithmic_delay_samples() const noexcept {
    return win_len + hop;
  }
  double algorithmic_delay_ms() const noexcept {
    return 1000.0 * static_cast<double>(algorithmic_delay_samples()) /
           sample_rate;
  }
  double bin_hz(std::size_t k) const noexcept {
    return static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
  }

  void Validate() const {
    Require(sample_rate == kSampleRate, ErrorKind::kInvalidArgument,
            "sample rate must be 16000 Hz");
    Require(win_len > 0 && hop * 2 == win_len, ErrorKind::kInvalidArgument,
            "hop must be half the window length");
    Require(fft_size == win_len, ErrorKind::kInvalidArgument,
            "fft size must equal the window length");
  }
};

template <class Real = float>
struct Wave {
  std::vector<Real> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const noexcept { return samples.size(); }

  void Validate() const {
    Require(sample_rate == kSampleRate, ErrorKind::kWavSampleRate,
            "expected 16000 Hz, got " + std::to_string(sample_rate));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      Require(std::isfinite(samples[i]), ErrorKind::kNumerical,
              "non-finite sample at index " + std::to_string(i));
    }
  }
};
using WaveBuffer = Wave<float>;

template <class Real = float>
struct ComplexSpectrogram {
  Matrix<Real> real;
  Matrix<Real> imag;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t frames, std::size_t bins)
      : real(frames, bins), imag(frames, bins) {}

  std::size_t frames() const noexcept { return real.rows(); }
  std::size_t bins() const noexcept { return real.cols(); }

  std::vector<std::complex<Real>> Frame(std::size_t t) const {
    std::vector<std::complex<Real>> out(bins());
    for (std::size_t k = 0; k < bins(); ++k) out[k] = {real(t, k), imag(t, k)};
    return out;
  }

  void SetFrame(std::size_t t, std::span<const std::complex<Real>> frame) {
    Require(frame.size() == bins(), ErrorKind::kShapeMismatch,
            "spectrogram frame size");
    for (std::size_t k = 0; k < bins(); ++k) {
      real(t, k) = frame[k].real();
      imag(t, k) = frame[k].imag();
    }
  }

  bool AllFinite() const { return real.AllFinite() && imag.AllFinite(); }

  friend bool operator==(const ComplexSpectrogram&,
                         const ComplexSpectrogram&) = default;
};

template <class Real = float>
struct MagPhase {
  Matrix<Real> mag;
  Matrix<Real> phase;
};

template <class Real>
std::vector<Real> HannWindow(std::size_t n) {
  std::vector<Real> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = static_cast<Real>(
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                             static_cast<double>(n)));
  }
  return w;
}

// Causal framer: a frame is emitted as soon as its last sample arrives.
template <class Real = float>
class StreamingAnalyzer {
 public:
  using Frame = std::vector<std::complex<Real>>;

  explicit StreamingAnalyzer(StftConfig cfg = {})
      : cfg_(cfg),
        window_(HannWindow<Real>(cfg.win_len)),
        fft_(cfg.fft_size),
        windowed_(cfg.fft_size, Real(0)) {
    cfg_.Validate();
  }

  std::vector<Frame> Push(std::span<const Real> samples) {
    pending_.insert(pending_.end(), samples.begin(), samples.end());
    std::vector<Frame> frames;
    std::size_t start = 0;
    while (pending_.size() - start >= cfg_.win_len) {
      frames.push_back(Analyze({pending_.data() + start, cfg_.win_len}));
      start += cfg_.hop;
    }
    pending_.erase(pending_.begin(),
                   pending_.begin() + static_cast<std::ptrdiff_t>(start));
    emitted_ += frames.size();
    return frames;
  }

  std::size_t frames_emitted() const noexcept { return emitted_; }
  const StftConfig& config() const noexcept { return cfg_; }

 private:
  Frame Analyze(std::span<const Real> x) {
    for (std::size_t i = 0; i < cfg_.win_len; ++i) windowed_[i] = x[i] * window_[i];
    Frame out(cfg_.n_bins());
    fft_.Forward(windowed_, out);
    return out;
  }

  StftConfig cfg_;
  std::vector<Real> window_;
  RealFft<Real> fft_;
  std::vector<Real> windowed_;
  std::vector<Real> pending_;
  std::size_t emitted_ = 0;
};

// Smallest squared-window sum used as a synthesis denominator. Only the first
// and last ~18 samples of a signal fall under it.
inline constexpr double kWindowSumFloor = 1e-3;

// Weighted overlap-add. Each pushed frame finalizes `hop` output samples.
template <class Real = float>
class StreamingSynthesizer {
 public:
  explicit StreamingSynthesizer(StftConfig cfg = {})
      : cfg_(cfg),
        window_(HannWindow<Real>(cfg.win_len)),
        fft_(cfg.fft_size),
        frame_(cfg.fft_size),
        num_(cfg.win_len, Real(0)),
        den_(cfg.win_len, Real(0)) {
    cfg_.Validate();
  }

  std::vector<Real> Push(std::span<const std::complex<Real>> frame) {
    Require(frame.size() == cfg_.n_bins(), ErrorKind::kShapeMismatch,
            "synthesis frame must have " + std::to_string(cfg_.n_bins()) +
                " bins, got " + std::to_string(frame.size()));
    fft_.Inverse(frame, frame_);
    for (std::size_t i = 0; i < cfg_.win_len; ++i) {
      num_[i] += frame_[i] * window_[i];
      den_[i] += window_[i] * window_[i];
    }
    std::vector<Real> out = Emit(cfg_.hop);
    std::copy(num_.begin() + cfg_.hop, num_.end(), num_.begin());
    std::copy(den_.begin() + cfg_.hop, den_.end(), den_.begin());
    std::fill(num_.end() - cfg_.hop, num_.end(), Real(0));
    std::fill(den_.end() - cfg_.hop, den_.end(), Real(0));
    return out;
  }

  // Releases the overlap tail held after the last frame.
  std::vector<Real> Flush() {
    std::vector<Real> out = Emit(cfg_.win_len - cfg_.hop);
    std::fill(num_.begin(), num_.end(), Real(0));
    std::fill(den_.begin(), den_.end(), Real(0));
    return out;
  }

 private:
  std::vector<Real> Emit(std::size_t n) const {
    std::vector<Real> out(n);
    const Real floor = static_cast<Real>(kWindowSumFloor);
    for (std::size_t i = 0; i < n; ++i) out[i] = num_[i] / std::max(den_[i], floor);
    return out;
  }

  StftConfig cfg_;
  std::vector<Real> window_;
  RealFft<Real> fft_;
  std::vector<Real> frame_;
  std::vector<Real> num_;
  std::vector<Real> den_;
};

inline std::size_t FrameCount(std::size_t samples, const StftConfig& cfg) {
  if (samples < cfg.win_len) return 0;
  return (samples - cfg.win_len) / cfg.hop + 1;
}

template <class Real>
ComplexSpectrogram<Real> Analyze(const Wave<Real>& wave,
                                 const StftConfig& cfg = {}) {
  cfg.Validate();
  Require(wave.sample_rate == cfg.sample_rate, ErrorKind::kWavSampleRate,
          "expected " + std::to_string(cfg.sample_rate) + " Hz, got " +
              std::to_string(wave.sample_rate));
  Require(wave.size() >= cfg.win_len, ErrorKind::kInvalidArgument,
          "signal of " + std::to_string(wave.size()) +
              " samples is shorter than one window");
  StreamingAnalyzer<Real> analyzer(cfg);
  const auto frames = analyzer.Push(wave.samples);
  ComplexSpectrogram<Real> spec(frames.size(), cfg.n_bins());
  for (std::size_t t = 0; t < frames.size(); ++t) spec.SetFrame(t, frames[t]);
  return spec;
}

// Output length is (T - 1) * hop + win_len.
template <class Real>
Wave<Real> Synthesize(const ComplexSpectrogram<Real>& spec,
                      const StftConfig& cfg = {}) {
  cfg.Validate();
  Require(spec.bins() == cfg.n_bins(), ErrorKind::kShapeMismatch,
          "spectrogram has " + std::to_string(spec.bins()) + " bins, expected " +
              std::to_string(cfg.n_bins()));
  Wave<Real> wave;
  wave.sample_rate = cfg.sample_rate;
  if (spec.frames() == 0) return wave;
  StreamingSynthesizer<Real> synth(cfg);
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    const auto chunk = synth.Push(spec.Frame(t));
    wave.samples.insert(wave.samples.end(), chunk.begin(), chunk.end());
  }
  const auto tail = synth.Flush();
  wave.samples.insert(wave.samples.end(), tail.begin(), tail.end());
  return wave;
}

template <class Real>
MagPhase<Real> ToMagPhase(const ComplexSpectrogram<Real>& spec) {
  MagPhase<Real> mp{Matrix<Real>(spec.frames(), spec.bins()),
                    Matrix<Real>(spec.frames(), spec.bins())};
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    for (std::size_t k = 0; k < spec.bins(); ++k) {
      const Real re = spec.real(t, k);
      const Real im = spec.imag(t, k);
      mp.mag(t, k) = std::sqrt(re * re + im * im);
      mp.phase(t, k) = (re == 0 && im == 0) ? Real(0) : std::atan2(im, re);
    }
  }
  return mp;
}

template <class Real>
ComplexSpectrogram<Real> FromMagPhase(const Matrix<Real>& mag,
                                      const Matrix<Real>& phase) {
  RequireSameShape(mag, phase, "magnitude/phase");
  ComplexSpectrogram<Real> spec(mag.rows(), mag.cols());
  for (std::size_t t = 0; t < mag.rows(); ++t) {
    for (std::size_t k = 0; k < mag.cols(); ++k) {
      spec.real(t, k) = mag(t, k) * std::cos(phase(t, k));
      spec.imag(t, k) = mag(t, k) * std::sin(phase(t, k));
    }
  }
  return spec;
}

}  // namespace tscn::dsp
