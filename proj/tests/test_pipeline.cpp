// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "test_util.hpp"
#include "tscn/tscn.hpp"

namespace {

using namespace tscn;
namespace tt = tscn::testing;
namespace fs = std::filesystem;
using pipeline::EngineConfig;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("tscnpp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

template <class Real = double>
dsp::Wave<Real> MakeWave(const std::vector<double>& x) {
  dsp::Wave<Real> w;
  w.samples.assign(x.begin(), x.end());
  return w;
}

std::vector<std::uint8_t> WavBytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                   std::uint16_t bits, std::uint32_t n_samples) {
  std::vector<std::uint8_t> b;
  const auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  const auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  const std::uint32_t data = n_samples * channels * (bits / 8);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  u32(36 + data);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * (bits / 8));
  u16(static_cast<std::uint16_t>(channels * (bits / 8)));
  u16(bits);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  u32(data);
  b.resize(b.size() + data, 0);
  return b;
}

double MeasuredSnrDb(const dsp::Wave<double>& clean, const dsp::Wave<double>& mix) {
  double pc = 0, pn = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    pc += clean.samples[i] * clean.samples[i];
    const double n = mix.samples[i] - clean.samples[i];
    pn += n * n;
  }
  return 10.0 * std::log10(pc / pn);
}

// ---- WAV ----------------------------------------------------------------

TEST(Wav, FullScaleSquareWaveRoundTripIsBitExact) {
  TempDir dir;
  dsp::Wave<double> w;
  for (int i = 0; i < 1600; ++i) w.samples.push_back((i / 40) % 2 ? -1.0 : 32767.0 / 32768.0);
  pipeline::WriteWav(dir / "sq.wav", w);
  const auto r1 = pipeline::ReadWav<double>(dir / "sq.wav");
  pipeline::WriteWav(dir / "sq2.wav", r1);
  const auto r2 = pipeline::ReadWav<double>(dir / "sq2.wav");
  EXPECT_EQ(r1.samples, w.samples);
  EXPECT_EQ(r2.samples, r1.samples);
  std::ifstream a(dir / "sq.wav", std::ios::binary), b(dir / "sq2.wav", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa.size(), 44u + 2u * 1600u);
}

TEST(Wav, EveryPcmCodeRoundTrips) {
  dsp::Wave<float> w;
  for (int v = -32768; v <= 32767; ++v) w.samples.push_back(static_cast<float>(v / 32768.0));
  const auto bytes = pipeline::EncodeWav(w);
  const auto back = pipeline::DecodeWav<float>(bytes);
  EXPECT_EQ(back.samples, w.samples);
}

TEST(Wav, SaturatesOnWrite) {
  EXPECT_EQ(pipeline::ToPcm16(1.5), 32767);
  EXPECT_EQ(pipeline::ToPcm16(1.0), 32767);
  EXPECT_EQ(pipeline::ToPcm16(-1.5), -32768);
  EXPECT_EQ(pipeline::ToPcm16(-1.0), -32768);
  EXPECT_EQ(pipeline::ToPcm16(0.5), 16384);
  dsp::Wave<double> w;
  w.samples = {1.5};
  const auto back = pipeline::DecodeWav<double>(pipeline::EncodeWav(w));
  EXPECT_EQ(back.samples[0], 32767.0 / 32768.0);
}

TEST(Wav, DistinctErrorsForUnsupportedFormats) {
  EXPECT_TSCN_ERROR(pipeline::DecodeWav<float>(WavBytes(1, 1, 44100, 16, 10)),
                    ErrorKind::kWavSampleRate);
  EXPECT_TSCN_ERROR(pipeline::DecodeWav<float>(WavBytes(1, 2, 16000, 16, 10)),
                    ErrorKind::kWavChannels);
  EXPECT_TSCN_ERROR(pipeline::DecodeWav<float>(WavBytes(1, 1, 16000, 24, 10)),
                    ErrorKind::kWavBitDepth);
  EXPECT_TSCN_ERROR(pipeline::DecodeWav<float>(WavBytes(3, 1, 16000, 32, 10)),
                    ErrorKind::kWavMalformed);
  auto truncated = WavBytes(1, 1, 16000, 16, 10);
  truncated.resize(truncated.size() - 4);
  EXPECT_TSCN_ERROR(pipeline::DecodeWav<float>(truncated), ErrorKind::kWavMalformed);
  const std::vector<std::uint8_t> junk{'R', 'I', 'F', 'X', 0, 0, 0, 0, 'W', 'A', 'V', 'E'};
  EXPECT_TSCN_ERROR(pipeline::DecodeWav<float>(junk), ErrorKind::kWavMalformed);
  EXPECT_TSCN_ERROR(pipeline::ReadWav<float>("/nonexistent/dir/x.wav"), ErrorKind::kIo);
  dsp::Wave<float> w;
  w.sample_rate = 8000;
  EXPECT_TSCN_ERROR(pipeline::EncodeWav(w), ErrorKind::kWavSampleRate);
}

TEST(Wav, SkipsUnknownChunks) {
  auto b = WavBytes(1, 1, 16000, 16, 4);
  // Insert a LIST chunk with odd size (padded) between fmt and data.
  const std::vector<std::uint8_t> extra{'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  b.insert(b.begin() + 36, extra.begin(), extra.end());
  b[44 + 12] = 0x00;
  b[45 + 12] = 0x40;  // first sample 16384
  const auto w = pipeline::DecodeWav<double>(b);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w.samples[0], 0.5);
}

// ---- Mixing -------------------------------------------------------------

TEST(Mix, SnrGridIsExact) {
  const auto clean = MakeWave(tt::SpeechLike(16000));
  const auto noise = MakeWave(tt::WhiteNoise(20000, 8, 0.3));
  for (double snr : {-5.0, 0.0, 5.0, 10.0, 15.0}) {
    const auto mix = pipeline::MixAtSnr(clean, noise, snr);
    ASSERT_EQ(mix.size(), clean.size());
    EXPECT_NEAR(MeasuredSnrDb(clean, mix), snr, 1e-6);
  }
}

TEST(Mix, SixtyDbPutsNoiseSixtyDbDown) {
  const auto clean = MakeWave(tt::WhiteNoise(8000, 1));
  const auto noise = MakeWave(tt::WhiteNoise(8000, 2));
  const double g = pipeline::NoiseGainForSnr(clean, noise, 60.0);
  const double pc = pipeline::MeanPower<double>(clean.samples);
  const double pn = pipeline::MeanPower<double>(noise.samples);
  EXPECT_NEAR(10.0 * std::log10(g * g * pn / pc), -60.0, 1e-9);
}

TEST(Mix, Errors) {
  const auto clean = MakeWave(tt::WhiteNoise(100, 1));
  const auto zero = MakeWave(std::vector<double>(100, 0.0));
  const auto short_noise = MakeWave(tt::WhiteNoise(50, 2));
  EXPECT_TSCN_ERROR(pipeline::MixAtSnr(zero, clean, 0.0), ErrorKind::kInvalidArgument);
  EXPECT_TSCN_ERROR(pipeline::MixAtSnr(clean, zero, 0.0), ErrorKind::kInvalidArgument);
  EXPECT_TSCN_ERROR(pipeline::MixAtSnr(clean, short_noise, 0.0), ErrorKind::kInvalidArgument);
  EXPECT_TSCN_ERROR(pipeline::MixAtSnr(clean, clean, std::numeric_limits<double>::infinity()),
                    ErrorKind::kInvalidArgument);
}

// ---- Spectra CSV --------------------------------------------------------

TEST(SpectraCsv, ZeroSpectrogramIsFloorAndHeaderIsBinSpacing) {
  dsp::ComplexSpectrogram<float> spec(3, 161);
  std::stringstream ss;
  pipeline::DumpSpectra(ss, spec);
  const auto table = pipeline::ParseSpectraCsv(ss);
  ASSERT_EQ(table.freqs_hz.size(), 161u);
  for (std::size_t k = 0; k < 161; ++k) EXPECT_EQ(table.freqs_hz[k], 50.0 * static_cast<double>(k));
  ASSERT_EQ(table.db.rows(), 3u);
  for (std::size_t t = 0; t < 3; ++t) {
    for (double v : table.db.row(t)) EXPECT_EQ(v, -120.0);
  }
}

TEST(SpectraCsv, RoundTripRecoversValues) {
  dsp::ComplexSpectrogram<double> spec(5, 161);
  Rng rng(6);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t k = 0; k < 161; ++k) {
      spec.real(t, k) = rng.Normal() * 10.0;
      spec.imag(t, k) = rng.Normal() * 1e-3;
    }
  }
  std::stringstream ss;
  pipeline::DumpSpectra(ss, spec);
  const auto table = pipeline::ParseSpectraCsv(ss);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t k = 0; k < 161; ++k) {
      const double mag = std::hypot(spec.real(t, k), spec.imag(t, k));
      EXPECT_EQ(table.db(t, k), pipeline::MagnitudeDb(mag));
    }
  }
}

TEST(SpectraCsv, Errors) {
  dsp::ComplexSpectrogram<double> spec(1, 9);
  std::stringstream ss;
  EXPECT_TSCN_ERROR(pipeline::DumpSpectra(ss, spec), ErrorKind::kShapeMismatch);
  std::stringstream bad("0,50\n1,2,3\n");
  EXPECT_TSCN_ERROR(pipeline::ParseSpectraCsv(bad), ErrorKind::kShapeMismatch);
  dsp::ComplexSpectrogram<double> ok(1, 161);
  EXPECT_TSCN_ERROR(pipeline::DumpSpectra("/nonexistent/dir/s.csv", ok), ErrorKind::kIo);
}

// ---- Config -------------------------------------------------------------

TEST(Config, ParsesEveryKey) {
  const auto map = pipeline::ParseConfigText(
      "# comment\n"
      "seed = 7\n stage=1 \n pp = off # trailing\n\n"
      "precision = double\nreport_latency = on\noracle_epsilon = 1e-6\n"
      "alpha_d = 0.9\nbeta_dd = 0.95\nxi_min = 0.001\ngain_min = 0.2\n"
      "quefrency_min = 50\nquefrency_max = 150\ncepstral_notch_halfwidth = 3\n"
      "peak_threshold = 4\npeak_floor = 0.5\npower_floor = 1e-10\nspp_epsilon = 1e-9\n"
      "dump_spectra = s.csv\n");
  EngineConfig cfg;
  pipeline::ApplyConfig(map, cfg);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.stage, 1);
  EXPECT_FALSE(cfg.pp);
  EXPECT_EQ(cfg.precision, pipeline::Precision::kDouble);
  EXPECT_TRUE(cfg.report_latency);
  EXPECT_EQ(cfg.oracle_epsilon, 1e-6);
  EXPECT_EQ(cfg.pp_config.alpha_d, 0.9);
  EXPECT_EQ(cfg.pp_config.beta_dd, 0.95);
  EXPECT_EQ(cfg.pp_config.xi_min, 0.001);
  EXPECT_EQ(cfg.pp_config.gain_min, 0.2);
  EXPECT_EQ(cfg.pp_config.quefrency_min, 50u);
  EXPECT_EQ(cfg.pp_config.quefrency_max, 150u);
  EXPECT_EQ(cfg.pp_config.notch_halfwidth, 3u);
  EXPECT_EQ(cfg.pp_config.peak_ratio, 4.0);
  EXPECT_EQ(cfg.pp_config.peak_floor, 0.5);
  EXPECT_EQ(cfg.pp_config.power_floor, 1e-10);
  EXPECT_EQ(cfg.pp_config.spp_epsilon, 1e-9);
  EXPECT_EQ(cfg.dump_spectra, "s.csv");
  EXPECT_NO_THROW(cfg.Validate());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EngineConfig cfg;
  EXPECT_TSCN_ERROR(pipeline::ApplyConfig(pipeline::ParseConfigText("colour = red\n"), cfg),
                    ErrorKind::kUsage);
  EXPECT_TSCN_ERROR(pipeline::ApplyConfig(pipeline::ParseConfigText("seed = x\n"), cfg),
                    ErrorKind::kUsage);
  EXPECT_TSCN_ERROR(pipeline::ApplyConfig(pipeline::ParseConfigText("pp = maybe\n"), cfg),
                    ErrorKind::kUsage);
  EXPECT_TSCN_ERROR(pipeline::ParseConfigText("no equals sign\n"), ErrorKind::kUsage);
  EXPECT_TSCN_ERROR(pipeline::ReadConfigFile("/nonexistent/c.cfg"), ErrorKind::kIo);
}

TEST(Config, ValidateEnforcesExactlyOneSource) {
  EngineConfig cfg;
  EXPECT_TSCN_ERROR(cfg.Validate(), ErrorKind::kUsage);
  cfg.seed = 1;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.weights_path = "w.bin";
  EXPECT_TSCN_ERROR(cfg.Validate(), ErrorKind::kUsage);
  cfg.seed.reset();
  cfg.stage = 3;
  EXPECT_TSCN_ERROR(cfg.Validate(), ErrorKind::kUsage);
  EngineConfig oracle;
  oracle.oracle_gain = "clean.wav";
  EXPECT_NO_THROW(oracle.Validate());
}

// ---- Oracle gain --------------------------------------------------------

TEST(OracleGain, IdentityAndSilence) {
  Rng rng(2);
  std::vector<std::complex<double>> x(161), zero(161);
  for (auto& v : x) v = {rng.Normal(), rng.Normal()};
  const auto g1 = pipeline::OracleGain<double>(x, x);
  const auto g0 = pipeline::OracleGain<double>(zero, x);
  for (std::size_t k = 0; k < 161; ++k) {
    const double m = std::abs(x[k]);
    EXPECT_DOUBLE_EQ(g1[k], m / (m + 1e-8));
    EXPECT_EQ(g0[k], 0.0);
  }
  EXPECT_TSCN_ERROR(pipeline::OracleGain<double>(std::vector<std::complex<double>>(3), x),
                    ErrorKind::kShapeMismatch);
}

TEST(OracleGain, FollowsSpeechActivityAtMidSnr) {
  const auto clean = MakeWave(tt::SpeechLike(32000));
  const auto mix = pipeline::MixAtSnr(clean, MakeWave(tt::WhiteNoise(32000, 5)), 5.0);
  const auto S = dsp::Analyze(clean), X = dsp::Analyze(mix);
  std::vector<double> mean_gain, energy;
  for (std::size_t t = 0; t < X.frames(); ++t) {
    const auto s = S.Frame(t);
    const auto g = pipeline::OracleGain<double>(s, X.Frame(t));
    double gs = 0, e = 0;
    for (std::size_t k = 0; k < 161; ++k) {
      ASSERT_GE(g[k], 0.0);
      ASSERT_LE(g[k], 1.0);
      gs += g[k];
      e += std::norm(s[k]);
    }
    mean_gain.push_back(gs / 161.0);
    energy.push_back(std::log10(e + 1e-12));
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double mg = mean(mean_gain), me = mean(energy);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    sxy += (mean_gain[i] - mg) * (energy[i] - me);
    sxx += (mean_gain[i] - mg) * (mean_gain[i] - mg);
    syy += (energy[i] - me) * (energy[i] - me);
  }
  EXPECT_GT(sxy / std::sqrt(sxx * syy), 0.7);
  EXPECT_GT(mg, 0.0);
  EXPECT_LT(mg, 1.0);
}

// ---- Engine -------------------------------------------------------------

EngineConfig OracleConfig(bool pp) {
  EngineConfig cfg;
  cfg.oracle_gain = "in-memory";
  cfg.pp = pp;
  return cfg;
}

TEST(Engine, OracleIdentityRigReproducesInput) {
  const auto x = MakeWave<double>(tt::SpeechLike(8000, 0.3));
  const auto r = pipeline::EnhanceWave<double>(OracleConfig(false), nullptr, x, &x);
  const std::size_t frames = dsp::FrameCount(x.size(), {});
  ASSERT_EQ(r.output.size(), (frames - 1) * 160 + 320);
  double err = 0, ref = 0;
  for (std::size_t i = 320; i + 320 < r.output.size(); ++i) {
    err += std::pow(r.output.samples[i] - x.samples[i], 2);
    ref += x.samples[i] * x.samples[i];
  }
  EXPECT_LE(std::sqrt(err / ref), 1e-6);
}

TEST(Engine, OutputLengthDropsOnlyPartialTrailingFrame) {
  const auto x = MakeWave<double>(tt::WhiteNoise(1000, 3));
  const auto r = pipeline::EnhanceWave<double>(OracleConfig(true), nullptr, x, &x);
  EXPECT_EQ(r.output.size(), 960u);  // 5 frames
  const auto tiny = MakeWave<double>(tt::WhiteNoise(200, 3));
  EXPECT_EQ(pipeline::EnhanceWave<double>(OracleConfig(true), nullptr, tiny, &tiny).output.size(),
            0u);
}

class ModelEngine : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    store_ = new nn::ParamStore(nn::InitParams(model::ModelLayout(model::ModelConfig::Full()), 5));
    net_ = new model::TscnModel<float>(model::ModelConfig::Full(), *store_);
  }
  static void TearDownTestSuite() {
    delete net_;
    delete store_;
  }
  static EngineConfig SeedConfig(int stage = 2, bool pp = true) {
    EngineConfig cfg;
    cfg.seed = 5;
    cfg.stage = stage;
    cfg.pp = pp;
    return cfg;
  }
  static inline nn::ParamStore* store_ = nullptr;
  static inline model::TscnModel<float>* net_ = nullptr;
};

TEST_F(ModelEngine, TruncationLeavesEarlierOutputFramesBitIdentical) {
  const auto full = MakeWave<float>(tt::WhiteNoise(160 * 30, 4, 0.1));
  for (int stage : {1, 2}) {
    const auto ref = pipeline::EnhanceWave<float>(SeedConfig(stage), net_, full).output;
    for (std::size_t n : {10u, 21u}) {
      dsp::Wave<float> cut;
      cut.samples.assign(full.samples.begin(), full.samples.begin() + 160 * n);
      const auto out = pipeline::EnhanceWave<float>(SeedConfig(stage), net_, cut).output;
      ASSERT_GE(out.size(), (n - 2) * 160);
      for (std::size_t i = 0; i < (n - 2) * 160; ++i) {
        ASSERT_EQ(out.samples[i], ref.samples[i]) << "stage " << stage << " n " << n << " i " << i;
      }
    }
  }
}

TEST_F(ModelEngine, ChunkingInvariance) {
  const auto x = MakeWave<float>(tt::WhiteNoise(160 * 25 + 77, 6, 0.1));
  const auto ref = pipeline::EnhanceWave<float>(SeedConfig(), net_, x).output;
  for (std::uint64_t seed : {1u, 2u}) {
    pipeline::Engine<float> eng(SeedConfig(), net_);
    Rng rng(seed);
    std::vector<float> out;
    for (std::size_t pos = 0; pos < x.size();) {
      const std::size_t n = std::min<std::size_t>(1 + rng.Next() % 700, x.size() - pos);
      const auto y = eng.Push(std::span<const float>(x.samples.data() + pos, n));
      out.insert(out.end(), y.begin(), y.end());
      pos += n;
    }
    const auto tail = eng.Finish();
    out.insert(out.end(), tail.begin(), tail.end());
    EXPECT_EQ(out, ref.samples);
  }
}

TEST_F(ModelEngine, NeverReadsSampleTPlus480BeforeEmittingT) {
  pipeline::Engine<float> eng(SeedConfig(), net_);
  const auto x = tt::WhiteNoise(160 * 12, 7, 0.1);
  const std::vector<float> xf(x.begin(), x.end());
  std::size_t consumed = 0, emitted = 0;
  for (std::size_t pos = 0; pos < xf.size(); ++pos) {
    emitted += eng.Push(std::span<const float>(xf.data() + pos, 1)).size();
    consumed = pos + 1;
    // Output sample t must exist once input sample t + 480 has been read.
    if (consumed > 480) {
      ASSERT_GE(emitted, consumed - 480) << "after " << consumed;
    }
  }
  EXPECT_EQ(eng.latency().algorithmic_delay_ms, 30.0);
}

TEST_F(ModelEngine, DeterministicAcrossRunsAndFreshModels) {
  const auto x = MakeWave<float>(tt::WhiteNoise(160 * 15, 9, 0.1));
  const auto a = pipeline::EnhanceWave<float>(SeedConfig(), net_, x).output;
  const auto store = nn::InitParams(model::ModelLayout(model::ModelConfig::Full()), 5);
  const model::TscnModel<float> net(model::ModelConfig::Full(), store);
  const auto b = pipeline::EnhanceWave<float>(SeedConfig(), &net, x).output;
  EXPECT_EQ(a.samples, b.samples);
}

TEST_F(ModelEngine, LatencyReportIsPopulated) {
  const auto x = MakeWave<float>(tt::WhiteNoise(160 * 20, 2, 0.1));
  const auto r = pipeline::EnhanceWave<float>(SeedConfig(), net_, x);
  EXPECT_EQ(r.latency.frames, 19u);
  EXPECT_GT(r.latency.mean_ms, 0.0);
  EXPECT_LE(r.latency.mean_ms, r.latency.max_ms);
  EXPECT_LE(r.latency.p95_ms, r.latency.max_ms);
  EXPECT_EQ(r.latency.algorithmic_delay_ms, 30.0);
  const auto json = r.latency.ToJson();
  EXPECT_NE(json.find("\"frames\":19"), std::string::npos) << json;
  EXPECT_NE(json.find("\"algorithmic_delay_ms\":30"), std::string::npos) << json;
}

TEST_F(ModelEngine, NanWeightsAbortWithFrameIndex) {
  auto store = *store_;
  store.begin()->second.data()[0] = std::numeric_limits<float>::quiet_NaN();
  const model::TscnModel<float> net(model::ModelConfig::Full(), store);
  const auto x = MakeWave<float>(tt::WhiteNoise(160 * 5, 2, 0.1));
  try {
    pipeline::EnhanceWave<float>(SeedConfig(), &net, x);
    FAIL() << "expected a numerical error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("frame 0"), std::string::npos) << e.what();
  }
}

TEST_F(ModelEngine, SpectraHookWritesOneRowPerFrame) {
  const auto x = MakeWave<float>(tt::WhiteNoise(160 * 8, 2, 0.1));
  std::stringstream ss;
  const auto r = pipeline::EnhanceWave<float>(SeedConfig(), net_, x, nullptr, &ss);
  const auto table = pipeline::ParseSpectraCsv(ss);
  EXPECT_EQ(table.db.rows(), r.latency.frames);
}

TEST(Engine, RejectsBadSetups) {
  EXPECT_TSCN_ERROR(pipeline::Engine<float>(EngineConfig{}, nullptr), ErrorKind::kUsage);
  EngineConfig seeded;
  seeded.seed = 1;
  EXPECT_TSCN_ERROR(pipeline::Engine<float>(seeded, nullptr), ErrorKind::kInvalidArgument);
  const auto x = MakeWave<double>(tt::WhiteNoise(800, 1));
  const auto y = MakeWave<double>(tt::WhiteNoise(640, 1));
  EXPECT_TSCN_ERROR(pipeline::EnhanceWave<double>(OracleConfig(true), nullptr, x, &y),
                    ErrorKind::kShapeMismatch);
  EXPECT_TSCN_ERROR(pipeline::EnhanceWave<double>(OracleConfig(true), nullptr, x, nullptr),
                    ErrorKind::kInvalidArgument);
  pipeline::Engine<double> eng(OracleConfig(true), nullptr);
  EXPECT_TSCN_ERROR(eng.Push(std::span<const double>(x.samples)), ErrorKind::kShapeMismatch);
}

TEST(Engine, NonFiniteInputAborts) {
  auto x = MakeWave<double>(tt::WhiteNoise(1600, 1));
  x.samples[700] = std::numeric_limits<double>::infinity();
  try {
    pipeline::EnhanceWave<double>(OracleConfig(true), nullptr, x, &x);
    FAIL() << "expected a numerical error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("frame 3"), std::string::npos) << e.what();
  }
}

TEST(Engine, OracleModeAtMinusFiveDbImprovesSegmentalSnr) {
  const auto clean = MakeWave(tt::SpeechLike(16000 * 4));
  const auto noisy = pipeline::MixAtSnr(clean, MakeWave(tt::WhiteNoise(16000 * 4, 12)), -5.0);
  const auto r = pipeline::EnhanceWave<double>(OracleConfig(true), nullptr, noisy, &clean);
  const std::size_t end = r.output.size() - 320;
  const double before = tt::SegmentalSnr(clean.samples, noisy.samples, 320, 320, end);
  const double after = tt::SegmentalSnr(clean.samples, r.output.samples, 320, 320, end);
  EXPECT_GE(after - before, 3.0) << "before " << before << " after " << after;
}

// ---- Command-line tool ----------------------------------------------------

int RunCli(const std::string& args) {
  const std::string cmd = std::string(TSCN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    clean_ = dir_ / "clean.wav";
    noise_ = dir_ / "noise.wav";
    pipeline::WriteWav(clean_, MakeWave(tt::SpeechLike(4000)));
    pipeline::WriteWav(noise_, MakeWave(tt::WhiteNoise(4000, 2, 0.1)));
  }
  TempDir dir_;
  std::string clean_, noise_;
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("enhance --in " + clean_), 2);
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + (dir_ / "o.wav")), 2);
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + (dir_ / "o.wav") + " --seed 1 --stage 3"), 2);
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + (dir_ / "o.wav") + " --seed 1 --weights w"), 2);
  EXPECT_EQ(RunCli("bogus"), 2);
}

TEST_F(Cli, MixThenOracleEnhanceSucceeds) {
  const auto mix = dir_ / "mix.wav";
  ASSERT_EQ(RunCli("mix --clean " + clean_ + " --noise " + noise_ + " --snr 0 --out " + mix), 0);
  const auto m = pipeline::ReadWav<double>(mix);
  EXPECT_EQ(m.size(), 4000u);
  const auto out = dir_ / "out.wav", csv = dir_ / "s.csv";
  ASSERT_EQ(RunCli("enhance --in " + mix + " --out " + out + " --oracle-gain " + clean_ +
                   " --dump-spectra " + csv + " --report-latency"),
            0);
  EXPECT_EQ(pipeline::ReadWav<double>(out).size(), (dsp::FrameCount(4000, {}) - 1) * 160 + 320);
  std::ifstream in(csv);
  EXPECT_EQ(pipeline::ParseSpectraCsv(in).db.rows(), dsp::FrameCount(4000, {}));
}

TEST_F(Cli, InputFormatErrorsExitThree) {
  EXPECT_EQ(RunCli("enhance --in " + (dir_ / "missing.wav") + " --out " + (dir_ / "o.wav") + " --seed 1"), 3);
  const auto bad = dir_ / "bad.wav";
  std::ofstream(bad) << "not a wav file";
  EXPECT_EQ(RunCli("enhance --in " + bad + " --out " + (dir_ / "o.wav") + " --seed 1"), 3);
  const auto rate = dir_ / "rate.wav";
  const auto bytes = WavBytes(1, 1, 44100, 16, 100);
  std::ofstream(rate, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                               static_cast<std::streamsize>(bytes.size()));
  EXPECT_EQ(RunCli("enhance --in " + rate + " --out " + (dir_ / "o.wav") + " --seed 1"), 3);
  const auto shorter = dir_ / "short.wav";
  pipeline::WriteWav(shorter, MakeWave(tt::SpeechLike(3000)));
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + (dir_ / "o.wav") + " --oracle-gain " + shorter), 3);
}

TEST_F(Cli, WeightFileErrorsExitFour) {
  const auto w = dir_ / "w.bin";
  ASSERT_EQ(RunCli("init-weights --seed 3 --out " + w), 0);
  const auto out = dir_ / "o.wav";
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + out + " --weights " + w), 0);
  std::string bytes;
  {
    std::ifstream in(w, std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(in)), {});
  }
  auto corrupt = bytes;
  corrupt[corrupt.size() / 2] ^= 0x10;
  std::ofstream(dir_ / "c.bin", std::ios::binary) << corrupt;
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + out + " --weights " + (dir_ / "c.bin")), 4);
  std::ofstream(dir_ / "t.bin", std::ios::binary) << bytes.substr(0, bytes.size() / 3);
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + out + " --weights " + (dir_ / "t.bin")), 4);
  std::ofstream(dir_ / "m.bin", std::ios::binary) << "XXXXXX" << bytes.substr(6);
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + out + " --weights " + (dir_ / "m.bin")), 4);
  const auto micro = dir_ / "micro.bin";
  ASSERT_EQ(RunCli("init-weights --micro --seed 3 --out " + micro), 0);
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + out + " --weights " + micro), 4);
}

TEST_F(Cli, NanWeightsExitFive) {
  auto store = nn::InitParams(model::ModelLayout(model::ModelConfig::Full()), 1);
  store.begin()->second.data()[0] = std::numeric_limits<float>::quiet_NaN();
  const auto w = dir_ / "nan.bin";
  nn::SaveParams(w, store);
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + (dir_ / "o.wav") + " --weights " + w), 5);
}

TEST_F(Cli, ConfigFileAndFlagOverride) {
  const auto cfg = dir_ / "c.cfg";
  std::ofstream(cfg) << "seed = 2\nstage = 1\npp = off\n";
  const auto a = dir_ / "a.wav", b = dir_ / "b.wav", c = dir_ / "c.wav";
  ASSERT_EQ(RunCli("enhance --in " + clean_ + " --out " + a + " --config " + cfg), 0);
  ASSERT_EQ(RunCli("enhance --in " + clean_ + " --out " + b + " --seed 2 --stage 1 --pp off"), 0);
  ASSERT_EQ(RunCli("enhance --in " + clean_ + " --out " + c + " --config " + cfg + " --pp on"), 0);
  const auto wa = pipeline::ReadWav<double>(a), wb = pipeline::ReadWav<double>(b),
             wc = pipeline::ReadWav<double>(c);
  EXPECT_EQ(wa.samples, wb.samples);
  EXPECT_NE(wa.samples, wc.samples);
  std::ofstream(dir_ / "bad.cfg") << "unknown = 1\n";
  EXPECT_EQ(RunCli("enhance --in " + clean_ + " --out " + a + " --config " + (dir_ / "bad.cfg")), 2);
}

TEST_F(Cli, DeterministicOutputFiles) {
  const auto a = dir_ / "a.wav", b = dir_ / "b.wav";
  ASSERT_EQ(RunCli("enhance --in " + clean_ + " --out " + a + " --seed 4"), 0);
  ASSERT_EQ(RunCli("enhance --in " + clean_ + " --out " + b + " --seed 4"), 0);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_GT(sa.size(), 44u);
}

}  // namespace
