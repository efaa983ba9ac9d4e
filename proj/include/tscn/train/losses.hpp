// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Training objectives over spectrograms, accumulated in double precision.
//
//   L_cm  = || |S_cm| - |S| ||_F^2                         (stage 1)
//   L_ri  = || S_cs_r - S_r ||_F^2 + || S_cs_i - S_i ||_F^2
//   L_mag = || |S_cs| - |S| ||_F^2
//   L     = L_ri + L_mag + lambda * L_cm                    (joint)
//
// With Reduction::kMean every term is divided by its element count (T x F).
// Gradients are taken with respect to the estimates; the magnitude gradient
// replaces 1/|S_cs| by 1/sqrt(|S_cs|^2 + eps) so it stays finite at zero bins.

#include <cmath>
#include <cstddef>
#include <string>

#include "tscn/core/error.hpp"
#include "tscn/core/tensor.hpp"
#include "tscn/dsp/stft.hpp"

namespace tscn::train {

enum class Reduction { kSum, kMean };

inline const char* ToString(Reduction r) { return r == Reduction::kSum ? "sum" : "mean"; }

struct LossConfig {
  double lambda_cm = 0.1;
  double mag_epsilon = 1e-8;
  Reduction reduction = Reduction::kSum;

  void Validate() const {
    Require(lambda_cm >= 0, ErrorKind::kInvalidArgument, "lambda_cm must be >= 0");
    Require(mag_epsilon > 0, ErrorKind::kInvalidArgument, "mag_epsilon must be > 0");
  }
};

struct LossReport {
  double l_cm = 0;
  double l_ri = 0;
  double l_mag = 0;
  double l_total = 0;
  Reduction reduction = Reduction::kSum;
};

namespace detail {

inline double Scale(std::size_t n, Reduction r) {
  return r == Reduction::kMean && n > 0 ? 1.0 / static_cast<double>(n) : 1.0;
}

template <class Real>
void CheckPair(const dsp::ComplexSpectrogram<Real>& est,
               const dsp::ComplexSpectrogram<Real>& clean, const char* what) {
  RequireSameShape(est.real, clean.real, what);
  RequireSameShape(est.imag, clean.imag, what);
  RequireSameShape(est.real, est.imag, what);
}

}  // namespace detail

template <class Real>
double LossCm(const Matrix<Real>& est_mag, const Matrix<Real>& clean_mag,
              Reduction r = Reduction::kSum) {
  RequireSameShape(est_mag, clean_mag, "loss_cm");
  double sum = 0;
  for (std::size_t i = 0; i < est_mag.size(); ++i) {
    const double d = static_cast<double>(est_mag.data()[i]) - clean_mag.data()[i];
    sum += d * d;
  }
  return sum * detail::Scale(est_mag.size(), r);
}

template <class Real>
double LossRi(const dsp::ComplexSpectrogram<Real>& est,
              const dsp::ComplexSpectrogram<Real>& clean, Reduction r = Reduction::kSum) {
  detail::CheckPair(est, clean, "loss_ri");
  double sum = 0;
  for (std::size_t i = 0; i < est.real.size(); ++i) {
    const double dr = static_cast<double>(est.real.data()[i]) - clean.real.data()[i];
    const double di = static_cast<double>(est.imag.data()[i]) - clean.imag.data()[i];
    sum += dr * dr + di * di;
  }
  return sum * detail::Scale(est.real.size(), r);
}

template <class Real>
double LossMag(const dsp::ComplexSpectrogram<Real>& est,
               const dsp::ComplexSpectrogram<Real>& clean, Reduction r = Reduction::kSum) {
  detail::CheckPair(est, clean, "loss_mag");
  double sum = 0;
  for (std::size_t i = 0; i < est.real.size(); ++i) {
    const double me = std::hypot(static_cast<double>(est.real.data()[i]),
                                 static_cast<double>(est.imag.data()[i]));
    const double mc = std::hypot(static_cast<double>(clean.real.data()[i]),
                                 static_cast<double>(clean.imag.data()[i]));
    sum += (me - mc) * (me - mc);
  }
  return sum * detail::Scale(est.real.size(), r);
}

// est/clean: stage-2 output and clean spectrum; est_mag/clean_mag: stage-1
// magnitude estimate and clean magnitude.
template <class Real>
LossReport LossJoint(const dsp::ComplexSpectrogram<Real>& est,
                     const dsp::ComplexSpectrogram<Real>& clean, const Matrix<Real>& est_mag,
                     const Matrix<Real>& clean_mag, const LossConfig& cfg = {}) {
  cfg.Validate();
  LossReport rep;
  rep.reduction = cfg.reduction;
  rep.l_cm = LossCm(est_mag, clean_mag, cfg.reduction);
  rep.l_ri = LossRi(est, clean, cfg.reduction);
  rep.l_mag = LossMag(est, clean, cfg.reduction);
  rep.l_total = rep.l_ri + rep.l_mag + cfg.lambda_cm * rep.l_cm;
  return rep;
}

// d/d(est_r, est_i) of one loss term.
struct SpectralGradient {
  Matrix<double> d_real;
  Matrix<double> d_imag;
};

template <class Real>
Matrix<double> GradCm(const Matrix<Real>& est_mag, const Matrix<Real>& clean_mag,
                      Reduction r = Reduction::kSum) {
  RequireSameShape(est_mag, clean_mag, "loss_cm gradient");
  Matrix<double> g(est_mag.rows(), est_mag.cols());
  const double s = 2.0 * detail::Scale(est_mag.size(), r);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.data()[i] = s * (static_cast<double>(est_mag.data()[i]) - clean_mag.data()[i]);
  }
  return g;
}

template <class Real>
SpectralGradient GradRi(const dsp::ComplexSpectrogram<Real>& est,
                        const dsp::ComplexSpectrogram<Real>& clean,
                        Reduction r = Reduction::kSum) {
  detail::CheckPair(est, clean, "loss_ri gradient");
  SpectralGradient g{Matrix<double>(est.frames(), est.bins()),
                     Matrix<double>(est.frames(), est.bins())};
  const double s = 2.0 * detail::Scale(est.real.size(), r);
  for (std::size_t i = 0; i < est.real.size(); ++i) {
    g.d_real.data()[i] = s * (static_cast<double>(est.real.data()[i]) - clean.real.data()[i]);
    g.d_imag.data()[i] = s * (static_cast<double>(est.imag.data()[i]) - clean.imag.data()[i]);
  }
  return g;
}

template <class Real>
SpectralGradient GradMag(const dsp::ComplexSpectrogram<Real>& est,
                         const dsp::ComplexSpectrogram<Real>& clean, double epsilon = 1e-8,
                         Reduction r = Reduction::kSum) {
  detail::CheckPair(est, clean, "loss_mag gradient");
  SpectralGradient g{Matrix<double>(est.frames(), est.bins()),
                     Matrix<double>(est.frames(), est.bins())};
  const double s = 2.0 * detail::Scale(est.real.size(), r);
  for (std::size_t i = 0; i < est.real.size(); ++i) {
    const double er = est.real.data()[i];
    const double ei = est.imag.data()[i];
    const double me = std::hypot(er, ei);
    const double mc = std::hypot(static_cast<double>(clean.real.data()[i]),
                                 static_cast<double>(clean.imag.data()[i]));
    const double k = s * (me - mc) / std::sqrt(er * er + ei * ei + epsilon);
    g.d_real.data()[i] = k * er;
    g.d_imag.data()[i] = k * ei;
  }
  return g;
}

// Gradients of the joint objective: with respect to the stage-2 estimate
// (RI + magnitude terms) and to the stage-1 magnitude (lambda * L_cm).
struct JointGradient {
  SpectralGradient d_est;
  Matrix<double> d_est_mag;
};

template <class Real>
JointGradient GradJoint(const dsp::ComplexSpectrogram<Real>& est,
                        const dsp::ComplexSpectrogram<Real>& clean, const Matrix<Real>& est_mag,
                        const Matrix<Real>& clean_mag, const LossConfig& cfg = {}) {
  cfg.Validate();
  JointGradient g{GradRi(est, clean, cfg.reduction), GradCm(est_mag, clean_mag, cfg.reduction)};
  const auto gm = GradMag(est, clean, cfg.mag_epsilon, cfg.reduction);
  for (std::size_t i = 0; i < gm.d_real.size(); ++i) {
    g.d_est.d_real.data()[i] += gm.d_real.data()[i];
    g.d_est.d_imag.data()[i] += gm.d_imag.data()[i];
  }
  for (auto& v : g.d_est_mag.data()) v *= cfg.lambda_cm;
  return g;
}

}  // namespace tscn::train
