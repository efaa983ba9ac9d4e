// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Two-stage complex network.
//
// Stage 1 (CME) maps the noisy magnitude to a coarse clean-magnitude estimate,
// which is recombined with the noisy phase into the coarse complex spectrum
// (CCS). Stage 2 (CSR) reads the CCS and the noisy spectrum as four input
// channels (ccs_r, ccs_i, x_r, x_i) and predicts a residual that is added to
// the CCS.
//
// Both stages share one topology: a gated convolutional encoder that halves
// the frequency axis per block, a stack of temporal modules over the
// flattened bottleneck (channels x last-bin count), and gated transposed-conv
// decoders fed with encoder skips. CME uses light-weight TCMs and one decoder
// with a softplus output; CSR uses dual TCMs and two linear decoders (real and
// imaginary residual).

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/core/tensor.hpp"
#include "tscn/dsp/stft.hpp"
#include "tscn/nn/layers.hpp"
#include "tscn/nn/params.hpp"
#include "tscn/nn/tcm.hpp"

namespace tscn::model {

struct ModelConfig {
  std::size_t bins = 161;
  std::size_t enc_blocks = 5;
  std::size_t channels = 64;
  std::size_t kernel_t = 2;
  std::size_t kernel_f = 3;
  std::size_t stride_f = 2;
  nn::TcmGroupSpec tcm{};  // outer width must equal channels * last bin count
  std::size_t cme_groups = 3;
  std::size_t csr_groups = 2;

  static ModelConfig Full() { return {}; }

  // Tiny configuration for oracle and training tests; same code paths.
  static ModelConfig Micro() {
    ModelConfig c;
    c.bins = 9;
    c.enc_blocks = 2;
    c.channels = 4;
    c.tcm = {.units = 2, .outer = 4, .inner = 4, .kernel = 3};
    c.cme_groups = 1;
    c.csr_groups = 1;
    return c;
  }

  // bins, then the frequency size after every encoder block.
  std::vector<std::size_t> FreqChain() const {
    std::vector<std::size_t> chain{bins};
    for (std::size_t i = 0; i < enc_blocks; ++i) {
      Require(chain.back() >= kernel_f, ErrorKind::kInvalidArgument,
              "too many encoder blocks for the bin count");
      chain.push_back(nn::ConvOutFreq(chain.back(), kernel_f, stride_f));
    }
    return chain;
  }

  std::size_t BottleneckWidth() const { return channels * FreqChain().back(); }

  void Validate() const {
    Require(enc_blocks >= 1 && channels >= 1, ErrorKind::kInvalidArgument,
            "model needs at least one encoder block and channel");
    Require(tcm.outer == BottleneckWidth(), ErrorKind::kInvalidArgument,
            "temporal module width " + std::to_string(tcm.outer) +
                " != flattened encoder output " + std::to_string(BottleneckWidth()));
    Require(tcm.units >= 1 && tcm.units < 16, ErrorKind::kInvalidArgument,
            "bad temporal group size");
  }

  nn::ConvGeometry EncoderGeometry(std::size_t block, std::size_t in_ch) const {
    return {.in_ch = block == 0 ? in_ch : channels,
            .out_ch = channels,
            .kernel_t = kernel_t,
            .kernel_f = kernel_f,
            .stride_f = stride_f};
  }

  // Decoder block j maps chain[E-j] bins back to chain[E-j-1]; the output
  // padding absorbs the floor of the matching encoder stride.
  nn::ConvGeometry DecoderGeometry(std::size_t block) const {
    const auto chain = FreqChain();
    const std::size_t in_f = chain[enc_blocks - block];
    const std::size_t target = chain[enc_blocks - block - 1];
    const std::size_t base = (in_f - 1) * stride_f + kernel_f;
    Require(target >= base && target - base < stride_f, ErrorKind::kInvalidArgument,
            "decoder cannot reach encoder skip size");
    return {.in_ch = 2 * channels,
            .out_ch = channels,
            .kernel_t = kernel_t,
            .kernel_f = kernel_f,
            .stride_f = stride_f,
            .transposed = true,
            .output_padding = target - base};
  }
};

template <class Real>
inline Real Softplus(Real x) {
  return x > Real(20) ? x : std::log1p(std::exp(x));
}

// Encoder -> temporal stack -> decoder(s), stepped one frame at a time.
// Unit is nn::TcmLight or nn::Dtcm.
template <class Real, template <class> class Unit>
class SpectralNet {
  using Block = nn::GatedConvBlock<Real>;
  using UnitT = Unit<Real>;
  static constexpr bool kDual = std::is_same_v<UnitT, nn::Dtcm<Real>>;

 public:
  struct State {
    std::vector<typename Block::State> enc;
    std::vector<typename UnitT::State> units;
    std::vector<std::vector<typename Block::State>> dec;
    std::vector<std::vector<Real>> enc_out;
    std::vector<Real> mid, cat, prev, next, head;
  };

  SpectralNet() = default;
  SpectralNet(const nn::ParamStore& store, const ModelConfig& cfg, const std::string& prefix,
              std::size_t in_ch, std::size_t groups, std::size_t decoders)
      : cfg_(cfg), in_ch_(in_ch), chain_(cfg.FreqChain()) {
    cfg.Validate();
    for (std::size_t i = 0; i < cfg.enc_blocks; ++i) {
      enc_.emplace_back(store, EncName(prefix, i), cfg.EncoderGeometry(i, in_ch), chain_[i]);
    }
    for (std::size_t u = 0; u < groups * cfg.tcm.units; ++u) {
      units_.push_back(MakeUnit(store, UnitName(prefix, u), cfg.tcm, u % cfg.tcm.units));
    }
    dec_.resize(decoders);
    for (std::size_t d = 0; d < decoders; ++d) {
      const std::string dp = DecName(prefix, d, decoders);
      for (std::size_t j = 0; j < cfg.enc_blocks; ++j) {
        dec_[d].emplace_back(store, dp + "." + std::to_string(j), cfg.DecoderGeometry(j),
                             chain_[cfg.enc_blocks - j]);
      }
      heads_.emplace_back(store, dp + ".out", cfg.channels, 1);
    }
  }

  static void AppendLayout(nn::ParamLayout& layout, const ModelConfig& cfg,
                           const std::string& prefix, std::size_t in_ch, std::size_t groups,
                           std::size_t decoders) {
    cfg.Validate();
    for (std::size_t i = 0; i < cfg.enc_blocks; ++i) {
      Block::AppendLayout(layout, EncName(prefix, i), cfg.EncoderGeometry(i, in_ch));
    }
    for (std::size_t u = 0; u < groups * cfg.tcm.units; ++u) {
      const std::size_t r = u % cfg.tcm.units;
      if constexpr (kDual) {
        UnitT::AppendLayout(layout, UnitName(prefix, u), cfg.tcm.outer, cfg.tcm.inner,
                            cfg.tcm.kernel, cfg.tcm.dilation(r),
                            cfg.tcm.complementary_dilation(r));
      } else {
        UnitT::AppendLayout(layout, UnitName(prefix, u), cfg.tcm.outer, cfg.tcm.inner,
                            cfg.tcm.kernel, cfg.tcm.dilation(r));
      }
    }
    for (std::size_t d = 0; d < decoders; ++d) {
      const std::string dp = DecName(prefix, d, decoders);
      for (std::size_t j = 0; j < cfg.enc_blocks; ++j) {
        Block::AppendLayout(layout, dp + "." + std::to_string(j), cfg.DecoderGeometry(j));
      }
      nn::Pointwise<Real>::AppendLayout(layout, dp + ".out", cfg.channels, 1);
    }
  }

  State MakeState() const {
    State st;
    for (const auto& b : enc_) {
      st.enc.push_back(b.MakeState());
      st.enc_out.emplace_back(b.out_size());
    }
    for (const auto& u : units_) st.units.push_back(u.MakeState());
    for (const auto& chain : dec_) {
      auto& states = st.dec.emplace_back();
      for (const auto& b : chain) states.push_back(b.MakeState());
    }
    const std::size_t bins = cfg_.bins;
    const std::size_t widest = bins * cfg_.channels;
    st.mid.resize(cfg_.BottleneckWidth());
    st.cat.resize(2 * widest);
    st.prev.resize(widest);
    st.next.resize(widest);
    st.head.resize(bins);
    return st;
  }

  std::size_t in_channels() const noexcept { return in_ch_; }
  std::size_t decoders() const noexcept { return dec_.size(); }
  std::size_t bins() const noexcept { return cfg_.bins; }

  // Past input frames that can influence the current output.
  std::size_t ReceptiveField() const {
    std::size_t lc = 0;
    for (const auto& b : enc_) lc += b.left_context();
    for (const auto& u : units_) lc += u.left_context();
    if (!dec_.empty()) {
      for (const auto& b : dec_[0]) lc += b.left_context();
    }
    return lc;
  }

  // in: bins x in_channels (channel-last). out: bins x decoders, before any
  // output activation.
  void Step(State& st, std::span<const Real> in, std::span<Real> out) const {
    Require(in.size() == cfg_.bins * in_ch_, ErrorKind::kShapeMismatch,
            "network input frame has " + std::to_string(in.size()) + " values, expected " +
                std::to_string(cfg_.bins * in_ch_));
    Require(out.size() == cfg_.bins * dec_.size(), ErrorKind::kShapeMismatch,
            "network output frame size");
    std::span<const Real> cur = in;
    for (std::size_t i = 0; i < enc_.size(); ++i) {
      enc_[i].Step(st.enc[i], cur, st.enc_out[i]);
      cur = st.enc_out[i];
    }
    std::copy(cur.begin(), cur.end(), st.mid.begin());
    for (std::size_t u = 0; u < units_.size(); ++u) units_[u].Step(st.units[u], st.mid);

    const std::size_t c_n = cfg_.channels;
    const std::size_t e_n = enc_.size();
    for (std::size_t d = 0; d < dec_.size(); ++d) {
      std::copy(st.mid.begin(), st.mid.end(), st.prev.begin());
      for (std::size_t j = 0; j < e_n; ++j) {
        const auto& block = dec_[d][j];
        const std::size_t f_in = block.in_freq();
        const std::vector<Real>& skip = st.enc_out[e_n - 1 - j];
        for (std::size_t f = 0; f < f_in; ++f) {
          std::copy_n(st.prev.begin() + f * c_n, c_n, st.cat.begin() + f * 2 * c_n);
          std::copy_n(skip.begin() + f * c_n, c_n, st.cat.begin() + f * 2 * c_n + c_n);
        }
        block.Step(st.dec[d][j], std::span<const Real>(st.cat).first(f_in * 2 * c_n),
                   std::span<Real>(st.next).first(block.out_size()));
        std::swap(st.prev, st.next);
      }
      heads_[d].Apply(std::span<const Real>(st.prev).first(cfg_.bins * c_n), st.head, cfg_.bins);
      for (std::size_t f = 0; f < cfg_.bins; ++f) out[f * dec_.size() + d] = st.head[f];
    }
  }

 private:
  static std::string EncName(const std::string& p, std::size_t i) {
    return p + ".enc." + std::to_string(i);
  }
  static std::string UnitName(const std::string& p, std::size_t u) {
    return p + ".tcm." + std::to_string(u);
  }
  static std::string DecName(const std::string& p, std::size_t d, std::size_t n) {
    if (n == 1) return p + ".dec";
    if (n == 2) return p + (d == 0 ? ".dec_r" : ".dec_i");
    return p + ".dec" + std::to_string(d);
  }

  static UnitT MakeUnit(const nn::ParamStore& store, const std::string& name,
                        const nn::TcmGroupSpec& g, std::size_t r) {
    if constexpr (kDual) {
      return UnitT(store, name, g.outer, g.inner, g.kernel, g.dilation(r),
                   g.complementary_dilation(r));
    } else {
      return UnitT(store, name, g.outer, g.inner, g.kernel, g.dilation(r));
    }
  }

  ModelConfig cfg_;
  std::size_t in_ch_ = 0;
  std::vector<std::size_t> chain_;
  std::vector<Block> enc_;
  std::vector<UnitT> units_;
  std::vector<std::vector<Block>> dec_;
  std::vector<nn::Pointwise<Real>> heads_;
};

template <class Real>
using CmeNet = SpectralNet<Real, nn::TcmLight>;
template <class Real>
using CsrNet = SpectralNet<Real, nn::Dtcm>;

inline constexpr std::size_t kCmeInputs = 1;
inline constexpr std::size_t kCsrInputs = 4;

inline nn::ParamLayout CmeLayout(const ModelConfig& cfg) {
  nn::ParamLayout layout;
  CmeNet<float>::AppendLayout(layout, cfg, "cme", kCmeInputs, cfg.cme_groups, 1);
  return layout;
}

inline nn::ParamLayout CsrLayout(const ModelConfig& cfg) {
  nn::ParamLayout layout;
  CsrNet<float>::AppendLayout(layout, cfg, "csr", kCsrInputs, cfg.csr_groups, 2);
  return layout;
}

inline nn::ParamLayout ModelLayout(const ModelConfig& cfg) {
  auto layout = CmeLayout(cfg);
  const auto csr = CsrLayout(cfg);
  layout.insert(layout.end(), csr.begin(), csr.end());
  return layout;
}

// |S_cm| e^{j theta_X} for one frame; theta of an all-zero noisy bin is 0.
template <class Real>
inline std::complex<Real> CouplePhase(Real mag, std::complex<Real> noisy) {
  const Real theta = (noisy.real() == 0 && noisy.imag() == 0)
                         ? Real(0)
                         : std::atan2(noisy.imag(), noisy.real());
  return {mag * std::cos(theta), mag * std::sin(theta)};
}

template <class Real>
dsp::ComplexSpectrogram<Real> CouplePhase(const Matrix<Real>& est_mag,
                                          const Matrix<Real>& noisy_phase) {
  RequireSameShape(est_mag, noisy_phase, "couple_phase");
  return dsp::FromMagPhase(est_mag, noisy_phase);
}

template <class Real>
struct TscnFrame {
  std::vector<Real> est_mag;                    // stage-1 magnitude
  std::vector<std::complex<Real>> ccs;          // coarse complex spectrum
  std::vector<std::complex<Real>> residual;     // stage-2 output
  std::vector<std::complex<Real>> refined;      // ccs + residual
};

template <class Real>
struct TscnOutputs {
  Matrix<Real> est_mag;
  dsp::ComplexSpectrogram<Real> ccs;
  dsp::ComplexSpectrogram<Real> residual;
  dsp::ComplexSpectrogram<Real> refined;
};

template <class Real = float>
class TscnModel {
 public:
  struct Stream {
    typename CmeNet<Real>::State cme;
    typename CsrNet<Real>::State csr;
    std::vector<Real> cme_in, cme_out, csr_in, csr_out;
  };

  TscnModel(const ModelConfig& cfg, const nn::ParamStore& store)
      : cfg_(cfg),
        cme_(store, cfg, "cme", kCmeInputs, cfg.cme_groups, 1),
        csr_(store, cfg, "csr", kCsrInputs, cfg.csr_groups, 2) {
    const auto layout = ModelLayout(cfg);
    nn::ValidateAgainst(store, layout);
    cme_params_ = nn::ParamCount(CmeLayout(cfg));
    total_params_ = nn::ParamCount(layout);
  }

  const ModelConfig& config() const noexcept { return cfg_; }
  std::size_t cme_param_count() const noexcept { return cme_params_; }
  std::size_t param_count() const noexcept { return total_params_; }
  const CmeNet<Real>& cme() const noexcept { return cme_; }
  const CsrNet<Real>& csr() const noexcept { return csr_; }

  Stream MakeStream() const {
    const std::size_t b = cfg_.bins;
    return {cme_.MakeState(), csr_.MakeState(), std::vector<Real>(b), std::vector<Real>(b),
            std::vector<Real>(4 * b), std::vector<Real>(2 * b)};
  }

  // Stage 1 for one frame: noisy magnitude in, estimated magnitude out.
  void CmeStep(Stream& s, std::span<const Real> noisy_mag, std::span<Real> est_mag) const {
    cme_.Step(s.cme, noisy_mag, est_mag);
    for (auto& v : est_mag) v = Softplus(v);
  }

  // Stage 2 for one frame: residual from (ccs, noisy).
  void CsrStep(Stream& s, std::span<const std::complex<Real>> ccs,
               std::span<const std::complex<Real>> noisy,
               std::span<std::complex<Real>> residual) const {
    const std::size_t b = cfg_.bins;
    Require(ccs.size() == b && noisy.size() == b && residual.size() == b,
            ErrorKind::kShapeMismatch, "csr frame size");
    for (std::size_t k = 0; k < b; ++k) {
      s.csr_in[4 * k + 0] = ccs[k].real();
      s.csr_in[4 * k + 1] = ccs[k].imag();
      s.csr_in[4 * k + 2] = noisy[k].real();
      s.csr_in[4 * k + 3] = noisy[k].imag();
    }
    csr_.Step(s.csr, s.csr_in, s.csr_out);
    for (std::size_t k = 0; k < b; ++k) residual[k] = {s.csr_out[2 * k], s.csr_out[2 * k + 1]};
  }

  // Full two-stage step. With run_csr == false only stage 1 runs and
  // `refined` equals `ccs`.
  void Step(Stream& s, std::span<const std::complex<Real>> noisy, TscnFrame<Real>& out,
            bool run_csr = true) const {
    const std::size_t b = cfg_.bins;
    Require(noisy.size() == b, ErrorKind::kShapeMismatch,
            "frame has " + std::to_string(noisy.size()) + " bins, expected " +
                std::to_string(b));
    out.est_mag.resize(b);
    out.ccs.resize(b);
    out.residual.assign(b, {});
    out.refined.resize(b);
    for (std::size_t k = 0; k < b; ++k) s.cme_in[k] = std::abs(noisy[k]);
    CmeStep(s, s.cme_in, out.est_mag);
    for (std::size_t k = 0; k < b; ++k) out.ccs[k] = CouplePhase(out.est_mag[k], noisy[k]);
    if (run_csr) CsrStep(s, out.ccs, noisy, out.residual);
    for (std::size_t k = 0; k < b; ++k) out.refined[k] = out.ccs[k] + out.residual[k];
  }

  Matrix<Real> CmeForward(const Matrix<Real>& noisy_mag) const {
    CheckBins(noisy_mag.cols());
    auto s = MakeStream();
    Matrix<Real> est(noisy_mag.rows(), cfg_.bins);
    for (std::size_t t = 0; t < noisy_mag.rows(); ++t) CmeStep(s, noisy_mag.row(t), est.row(t));
    return est;
  }

  dsp::ComplexSpectrogram<Real> CsrForward(const dsp::ComplexSpectrogram<Real>& ccs,
                                           const dsp::ComplexSpectrogram<Real>& noisy) const {
    CheckBins(ccs.bins());
    RequireSameShape(ccs.real, noisy.real, "csr_forward");
    auto s = MakeStream();
    dsp::ComplexSpectrogram<Real> res(ccs.frames(), cfg_.bins);
    std::vector<std::complex<Real>> r(cfg_.bins);
    for (std::size_t t = 0; t < ccs.frames(); ++t) {
      CsrStep(s, ccs.Frame(t), noisy.Frame(t), r);
      res.SetFrame(t, r);
    }
    return res;
  }

  TscnOutputs<Real> Forward(const dsp::ComplexSpectrogram<Real>& noisy,
                            bool run_csr = true) const {
    CheckBins(noisy.bins());
    const std::size_t n_t = noisy.frames();
    TscnOutputs<Real> o{Matrix<Real>(n_t, cfg_.bins), {n_t, cfg_.bins}, {n_t, cfg_.bins},
                        {n_t, cfg_.bins}};
    auto s = MakeStream();
    TscnFrame<Real> f;
    for (std::size_t t = 0; t < n_t; ++t) {
      Step(s, noisy.Frame(t), f, run_csr);
      std::copy(f.est_mag.begin(), f.est_mag.end(), o.est_mag.row(t).begin());
      o.ccs.SetFrame(t, f.ccs);
      o.residual.SetFrame(t, f.residual);
      o.refined.SetFrame(t, f.refined);
    }
    return o;
  }

 private:
  void CheckBins(std::size_t bins) const {
    Require(bins == cfg_.bins, ErrorKind::kShapeMismatch,
            "expected " + std::to_string(cfg_.bins) + " bins, got " + std::to_string(bins));
  }

  ModelConfig cfg_;
  CmeNet<Real> cme_;
  CsrNet<Real> csr_;
  std::size_t cme_params_ = 0;
  std::size_t total_params_ = 0;
};

}  // namespace tscn::model
