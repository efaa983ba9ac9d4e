// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "tscn/model/tscn.hpp"

namespace tscn::model {
namespace {

// Closed-form parameter count of the full-size network, written out from
// the block structure rather than from the layout code.
struct Counts {
  std::size_t cme = 0, csr = 0;
};

Counts ClosedFormCounts() {
  const std::size_t c = 64, w = 256, in = 64, k_t = 2, k_f = 3;
  const auto conv = [](std::size_t ci, std::size_t co, std::size_t taps) { return co * ci * taps + co; };
  const auto norm_act = [](std::size_t ch) { return 3 * ch; };
  const auto gated_block = [&](std::size_t ci, std::size_t co) {
    return 2 * conv(ci, co, k_t * k_f) + norm_act(co);
  };
  const auto encoder = [&](std::size_t in_ch) {
    std::size_t n = gated_block(in_ch, c);
    for (int i = 1; i < 5; ++i) n += gated_block(c, c);
    return n;
  };
  const auto decoder = [&] { return 5 * gated_block(2 * c, c) + conv(c, 1, 1); };
  const std::size_t gate = 2 * conv(in, in, 3) + norm_act(in);
  const std::size_t tcm = conv(w, in, 1) + norm_act(in) + gate + conv(in, w, 1);
  const std::size_t dtcm = conv(w, in, 1) + norm_act(in) + 2 * gate + conv(2 * in, w, 1);
  return {encoder(1) + 18 * tcm + decoder(), encoder(4) + 12 * dtcm + 2 * decoder()};
}

TEST(ModelConfigTest, FrequencyChainAndBottleneck) {
  const auto cfg = ModelConfig::Full();
  EXPECT_EQ(cfg.FreqChain(), (std::vector<std::size_t>{161, 80, 39, 19, 9, 4}));
  EXPECT_EQ(cfg.BottleneckWidth(), 256u);
  EXPECT_EQ(cfg.tcm.outer, 256u);
  EXPECT_EQ(cfg.tcm.inner, 64u);
  // Decoder steps reverse the chain; only 39 -> 80 needs an extra column.
  const std::size_t want_out[] = {9, 19, 39, 80, 161};
  const std::size_t want_pad[] = {0, 0, 0, 1, 0};
  const auto chain = cfg.FreqChain();
  for (std::size_t j = 0; j < 5; ++j) {
    const auto g = cfg.DecoderGeometry(j);
    EXPECT_EQ(g.OutFreq(chain[5 - j]), want_out[j]);
    EXPECT_EQ(g.output_padding, want_pad[j]) << j;
    EXPECT_EQ(g.in_ch, 128u);
  }
}

TEST(ModelConfigTest, RejectsInconsistentWidths) {
  auto cfg = ModelConfig::Full();
  cfg.tcm.outer = 200;
  EXPECT_TSCN_ERROR(cfg.Validate(), ErrorKind::kInvalidArgument);
  cfg = ModelConfig::Full();
  cfg.enc_blocks = 9;
  EXPECT_TSCN_ERROR(cfg.FreqChain(), ErrorKind::kInvalidArgument);
}

TEST(ModelTest, ParameterCountsMatchClosedForm) {
  const auto cfg = ModelConfig::Full();
  const auto want = ClosedFormCounts();
  const std::size_t cme = nn::ParamCount(CmeLayout(cfg));
  const std::size_t csr = nn::ParamCount(CsrLayout(cfg));
  EXPECT_EQ(cme, want.cme);
  EXPECT_EQ(csr, want.csr);
  EXPECT_EQ(cme, 1739329u);
  EXPECT_EQ(cme + csr, 4120451u);
  EXPECT_NEAR(static_cast<double>(cme) / 1.96e6, 1.0, 0.25);
  EXPECT_NEAR(static_cast<double>(cme + csr) / 4.99e6, 1.0, 0.25);
}

TEST(ModelTest, ReceptiveFields) {
  const auto cfg = ModelConfig::Full();
  const auto store = nn::InitParams(ModelLayout(cfg), 1);
  const TscnModel<float> m(cfg, store);
  // encoder 5 + 3 groups of 2 * (1 + 2 + ... + 32) + decoder 5
  EXPECT_EQ(m.cme().ReceptiveField(), 5u + 3u * 126u + 5u);
  // per group: 2 * sum max(2^r, 2^(5-r)) = 224
  EXPECT_EQ(m.csr().ReceptiveField(), 5u + 2u * 224u + 5u);
  EXPECT_EQ(m.cme_param_count(), 1739329u);
  EXPECT_EQ(m.param_count(), 4120451u);
}

dsp::ComplexSpectrogram<double> RandomSpectrum(std::size_t frames, std::size_t bins,
                                               std::uint64_t seed) {
  Rng rng(seed);
  dsp::ComplexSpectrogram<double> s(frames, bins);
  for (auto& v : s.real.data()) v = rng.Normal();
  for (auto& v : s.imag.data()) v = rng.Normal();
  return s;
}

// Empirical receptive field: perturb one input frame and see which output
// frames move.
TEST(ModelTest, MicroReceptiveFieldIsExact) {
  const auto cfg = ModelConfig::Micro();
  const auto store = nn::InitParams(ModelLayout(cfg), 4);
  const TscnModel<double> m(cfg, store);
  const std::size_t rf_cme = m.cme().ReceptiveField();
  const std::size_t rf_csr = m.csr().ReceptiveField();
  EXPECT_EQ(rf_cme, 2u + 2u * (1u + 2u) + 2u);
  EXPECT_EQ(rf_csr, 2u + 4u + 4u + 2u);
  const std::size_t frames = 40, at = 10;
  const auto x = RandomSpectrum(frames, cfg.bins, 5);
  auto y = x;
  y.real(at, 3) += 0.5;
  const auto a = m.Forward(x, true);
  const auto b = m.Forward(y, true);
  for (std::size_t t = 0; t < frames; ++t) {
    bool stage1 = false;
    for (std::size_t k = 0; k < cfg.bins; ++k) stage1 |= a.est_mag(t, k) != b.est_mag(t, k);
    EXPECT_EQ(stage1, t >= at && t <= at + rf_cme) << "t=" << t;
  }
  // Stage 2 sees the noisy frame directly and stage-1 output up to rf_cme
  // back, so its total span is the sum.
  for (std::size_t t = 0; t < frames; ++t) {
    bool moved = false;
    for (std::size_t k = 0; k < cfg.bins; ++k) moved |= a.residual.real(t, k) != b.residual.real(t, k);
    EXPECT_EQ(moved, t >= at && t <= at + rf_cme + rf_csr) << "t=" << t;
  }
}

TEST(ModelTest, TruncatedInputLeavesPastOutputsBitIdentical) {
  const auto cfg = ModelConfig::Micro();
  const auto store = nn::InitParams(ModelLayout(cfg), 6);
  const TscnModel<float> m(cfg, store);
  Rng rng(7);
  dsp::ComplexSpectrogram<float> x(30, cfg.bins);
  for (auto& v : x.real.data()) v = static_cast<float>(rng.Normal());
  for (auto& v : x.imag.data()) v = static_cast<float>(rng.Normal());
  const auto full = m.Forward(x);
  for (std::size_t n : {1u, 7u, 29u}) {
    dsp::ComplexSpectrogram<float> p(n, cfg.bins);
    for (std::size_t t = 0; t < n; ++t) p.SetFrame(t, x.Frame(t));
    const auto part = m.Forward(p);
    for (std::size_t t = 0; t < n; ++t) {
      EXPECT_EQ(part.refined.Frame(t), full.refined.Frame(t));
      for (std::size_t k = 0; k < cfg.bins; ++k) EXPECT_EQ(part.est_mag(t, k), full.est_mag(t, k));
    }
  }
}

TEST(ModelTest, StageOneOutputCouplesNoisyPhase) {
  const auto cfg = ModelConfig::Micro();
  const auto store = nn::InitParams(ModelLayout(cfg), 8);
  const TscnModel<double> m(cfg, store);
  auto x = RandomSpectrum(12, cfg.bins, 9);
  x.real(3, 2) = 0;
  x.imag(3, 2) = 0;
  const auto o = m.Forward(x, false);
  for (std::size_t t = 0; t < 12; ++t) {
    for (std::size_t k = 0; k < cfg.bins; ++k) {
      const double mag = o.est_mag(t, k);
      EXPECT_GT(mag, 0.0);  // softplus head
      const std::complex<double> c(o.ccs.real(t, k), o.ccs.imag(t, k));
      EXPECT_NEAR(std::abs(c), mag, 1e-12);
      if (x.real(t, k) != 0 || x.imag(t, k) != 0) {
        const double d = std::arg(c) - std::atan2(x.imag(t, k), x.real(t, k));
        EXPECT_NEAR(std::remainder(d, 2 * std::numbers::pi), 0.0, 1e-12);
      }
      // Stage 2 disabled: no residual.
      EXPECT_EQ(o.residual.real(t, k), 0.0);
      EXPECT_EQ(o.refined.real(t, k), o.ccs.real(t, k));
    }
  }
  EXPECT_EQ(o.ccs.imag(3, 2), 0.0);
  EXPECT_NEAR(o.ccs.real(3, 2), o.est_mag(3, 2), 1e-15);
}

TEST(ModelTest, RefinedIsCoarsePlusResidual) {
  const auto cfg = ModelConfig::Micro();
  const auto store = nn::InitParams(ModelLayout(cfg), 10);
  const TscnModel<double> m(cfg, store);
  const auto x = RandomSpectrum(8, cfg.bins, 11);
  const auto o = m.Forward(x);
  const auto r = m.CsrForward(o.ccs, x);
  EXPECT_TRUE(r == o.residual);
  for (std::size_t i = 0; i < o.refined.real.size(); ++i) {
    EXPECT_EQ(o.refined.real.data()[i], o.ccs.real.data()[i] + o.residual.real.data()[i]);
    EXPECT_EQ(o.refined.imag.data()[i], o.ccs.imag.data()[i] + o.residual.imag.data()[i]);
  }
  Matrix<double> mags(x.frames(), x.bins());
  for (std::size_t i = 0; i < mags.size(); ++i) {
    mags.data()[i] = std::abs(std::complex<double>(x.real.data()[i], x.imag.data()[i]));
  }
  EXPECT_TRUE(m.CmeForward(mags) == o.est_mag);
}

TEST(ModelTest, SingleAndDoublePrecisionAgree) {
  const auto cfg = ModelConfig::Full();
  const auto store = nn::InitParams(ModelLayout(cfg), 12);
  const TscnModel<float> mf(cfg, store);
  const TscnModel<double> md(cfg, store);
  const auto xd = RandomSpectrum(6, cfg.bins, 13);
  dsp::ComplexSpectrogram<float> xf(6, cfg.bins);
  for (std::size_t i = 0; i < xd.real.size(); ++i) {
    xf.real.data()[i] = static_cast<float>(xd.real.data()[i]);
    xf.imag.data()[i] = static_cast<float>(xd.imag.data()[i]);
  }
  const auto of = mf.Forward(xf);
  const auto od = md.Forward(xd);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < od.refined.real.size(); ++i) {
    const double e = of.refined.real.data()[i] - od.refined.real.data()[i];
    num += e * e;
    den += od.refined.real.data()[i] * od.refined.real.data()[i];
  }
  EXPECT_LT(std::sqrt(num / den), 1e-4);
  EXPECT_TRUE(of.refined.AllFinite());
}

TEST(ModelTest, SilenceProducesFiniteOutput) {
  const auto cfg = ModelConfig::Full();
  const auto store = nn::InitParams(ModelLayout(cfg), 14);
  const TscnModel<float> m(cfg, store);
  const dsp::ComplexSpectrogram<float> zero(4, cfg.bins);
  const auto o = m.Forward(zero);
  EXPECT_TRUE(o.refined.AllFinite());
}

TEST(ModelTest, ShapeAndLayoutErrors) {
  const auto cfg = ModelConfig::Micro();
  auto store = nn::InitParams(ModelLayout(cfg), 15);
  const TscnModel<float> m(cfg, store);
  const dsp::ComplexSpectrogram<float> wrong(2, cfg.bins + 1);
  EXPECT_TSCN_ERROR(m.Forward(wrong), ErrorKind::kShapeMismatch);
  auto s = m.MakeStream();
  TscnFrame<float> f;
  const std::vector<std::complex<float>> short_frame(3);
  EXPECT_TSCN_ERROR(m.Step(s, short_frame, f), ErrorKind::kShapeMismatch);
  // A store built for a different configuration is rejected.
  const auto full_store = nn::InitParams(CmeLayout(ModelConfig::Full()), 1);
  EXPECT_TSCN_ERROR(TscnModel<float>(cfg, full_store), ErrorKind::kWeightShape);
}

TEST(ModelTest, LayoutNamesAreStable) {
  const auto layout = ModelLayout(ModelConfig::Full());
  EXPECT_EQ(layout.front().name, "cme.enc.0.conv_a.weight");
  bool has_dec_r = false, has_dec_i = false, has_cme_dec = false;
  for (const auto& p : layout) {
    has_dec_r |= p.name == "csr.dec_r.out.weight";
    has_dec_i |= p.name == "csr.dec_i.out.weight";
    has_cme_dec |= p.name == "cme.dec.4.conv_a.weight";
  }
  EXPECT_TRUE(has_dec_r && has_dec_i && has_cme_dec);
}

}  // namespace
}  // namespace tscn::model
