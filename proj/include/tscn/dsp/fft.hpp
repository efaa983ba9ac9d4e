// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include "tscn/core/error.hpp"

namespace tscn::dsp {

namespace detail {

// The FFTW planner is not re-entrant; plan execution is.
inline std::mutex& PlannerMutex() {
  static std::mutex m;
  return m;
}

template <class Real>
struct FftwApi;

template <>
struct FftwApi<double> {
  using Real = double;
  using Plan = fftw_plan;
  using Cpx = fftw_complex;
  static Real* AllocReal(std::size_t n) { return fftw_alloc_real(n); }
  static Cpx* AllocComplex(std::size_t n) { return fftw_alloc_complex(n); }
  static void Free(void* p) { fftw_free(p); }
  static Plan R2c(int n, double* in, Cpx* out) {
    return fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  static Plan C2r(int n, Cpx* in, double* out) {
    return fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  static void Execute(Plan p) { fftw_execute(p); }
  static void Destroy(Plan p) { fftw_destroy_plan(p); }
};

template <>
struct FftwApi<float> {
  using Plan = fftwf_plan;
  using Cpx = fftwf_complex;
  using Real = float;
  static Real* AllocReal(std::size_t n) { return fftwf_alloc_real(n); }
  static Cpx* AllocComplex(std::size_t n) { return fftwf_alloc_complex(n); }
  static void Free(void* p) { fftwf_free(p); }
  static Plan R2c(int n, float* in, Cpx* out) {
    return fftwf_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  static Plan C2r(int n, Cpx* in, float* out) {
    return fftwf_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  static void Execute(Plan p) { fftwf_execute(p); }
  static void Destroy(Plan p) { fftwf_destroy_plan(p); }
};

}  // namespace detail

// Real-input FFT of fixed size n. Forward is unnormalized; Inverse scales by
// 1/n so that Inverse(Forward(x)) == x.
template <class Real>
class RealFft {
  using Api = detail::FftwApi<Real>;

 public:
  explicit RealFft(std::size_t n) : n_(n) {
    Require(n >= 2, ErrorKind::kInvalidArgument, "fft size must be >= 2");
    real_ = Api::AllocReal(n_);
    cpx_ = Api::AllocComplex(bins());
    std::lock_guard lock(detail::PlannerMutex());
    fwd_ = Api::R2c(static_cast<int>(n_), real_, cpx_);
    inv_ = Api::C2r(static_cast<int>(n_), cpx_, real_);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  ~RealFft() {
    {
      std::lock_guard lock(detail::PlannerMutex());
      Api::Destroy(fwd_);
      Api::Destroy(inv_);
    }
    Api::Free(real_);
    Api::Free(cpx_);
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  void Forward(std::span<const Real> in, std::span<std::complex<Real>> out) {
    Require(in.size() == n_ && out.size() == bins(),
            ErrorKind::kShapeMismatch, "fft forward size");
    std::copy(in.begin(), in.end(), real_);
    Api::Execute(fwd_);
    for (std::size_t k = 0; k < bins(); ++k) {
      out[k] = {cpx_[k][0], cpx_[k][1]};
    }
  }

  void Inverse(std::span<const std::complex<Real>> in, std::span<Real> out) {
    Require(in.size() == bins() && out.size() == n_,
            ErrorKind::kShapeMismatch, "fft inverse size");
    for (std::size_t k = 0; k < bins(); ++k) {
      cpx_[k][0] = in[k].real();
      cpx_[k][1] = in[k].imag();
    }
    // A real signal has purely real DC and Nyquist bins.
    cpx_[0][1] = 0;
    if (n_ % 2 == 0) cpx_[bins() - 1][1] = 0;
    Api::Execute(inv_);
    const Real scale = Real(1) / static_cast<Real>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = real_[i] * scale;
  }

 private:
  std::size_t n_;
  Real* real_ = nullptr;
  typename Api::Cpx* cpx_ = nullptr;
  typename Api::Plan fwd_{};
  typename Api::Plan inv_{};
};

}  // namespace tscn::dsp
