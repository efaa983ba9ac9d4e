// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Streaming enhancement engine: STFT analysis, CME, phase coupling,
// optional CSR, optional post-processing, overlap-add synthesis. One engine
// instance owns the full state of one stream.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tscn/core/error.hpp"
#include "tscn/dsp/stft.hpp"
#include "tscn/model/tscn.hpp"
#include "tscn/nn/params.hpp"
#include "tscn/nn/weight_file.hpp"
#include "tscn/pipeline/spectra_csv.hpp"
#include "tscn/pipeline/wav.hpp"
#include "tscn/pp/post_processor.hpp"

namespace tscn::pipeline {

enum class Precision { kSingle, kDouble };

inline std::string ToString(Precision p) { return p == Precision::kSingle ? "single" : "double"; }

inline Precision ParsePrecision(const std::string& s) {
  if (s == "single" || s == "float" || s == "f32") return Precision::kSingle;
  if (s == "double" || s == "f64") return Precision::kDouble;
  Fail(ErrorKind::kUsage, "precision must be 'single' or 'double', got '" + s + "'");
  return Precision::kSingle;
}

struct EngineConfig {
  std::optional<std::string> weights_path;
  std::optional<std::uint64_t> seed;
  int stage = 2;
  bool pp = true;
  std::optional<std::string> oracle_gain;  // clean reference WAV
  Precision precision = Precision::kSingle;
  std::optional<std::string> dump_spectra;
  bool report_latency = false;
  double oracle_epsilon = 1e-8;
  pp::PpConfig pp_config;

  bool oracle() const noexcept { return oracle_gain.has_value(); }

  // Oracle-gain mode bypasses the network, so it accepts (and ignores) a
  // missing model source.
  void Validate() const {
    Require(stage == 1 || stage == 2, ErrorKind::kUsage,
            "stage must be 1 or 2, got " + std::to_string(stage));
    const int sources = static_cast<int>(weights_path.has_value()) + static_cast<int>(seed.has_value());
    if (oracle()) {
      Require(sources <= 1, ErrorKind::kUsage, "give at most one of --weights / --seed");
    } else {
      Require(sources == 1, ErrorKind::kUsage, "give exactly one of --weights / --seed");
    }
    Require(oracle_epsilon > 0, ErrorKind::kUsage, "oracle_epsilon must be > 0");
    try {
      pp_config.Validate();
    } catch (const Error& e) {
      Fail(ErrorKind::kUsage, e.what());
    }
  }
};

struct LatencyReport {
  std::size_t frames = 0;
  double mean_ms = 0;
  double p95_ms = 0;
  double max_ms = 0;
  double algorithmic_delay_ms = dsp::StftConfig{}.algorithmic_delay_ms();

  static LatencyReport FromTimings(std::vector<double> ms, const dsp::StftConfig& cfg = {}) {
    LatencyReport r;
    r.algorithmic_delay_ms = cfg.algorithmic_delay_ms();
    r.frames = ms.size();
    if (ms.empty()) return r;
    double sum = 0;
    for (double v : ms) sum += v;
    r.mean_ms = sum / static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(ms.size())));
    r.p95_ms = ms[std::max<std::size_t>(rank, 1) - 1];
    r.max_ms = ms.back();
    return r;
  }

  std::string ToJson() const {
    const nlohmann::json j = {{"frames", frames},
                              {"mean_ms", mean_ms},
                              {"p95_ms", p95_ms},
                              {"max_ms", max_ms},
                              {"algorithmic_delay_ms", algorithmic_delay_ms}};
    return j.dump();
  }
};

// gain(k) = min(1, |S(k)| / (|X(k)| + eps))
template <class Real>
std::vector<double> OracleGain(std::span<const std::complex<Real>> clean,
                               std::span<const std::complex<Real>> noisy, double eps = 1e-8) {
  Require(clean.size() == noisy.size(), ErrorKind::kShapeMismatch, "oracle gain frame sizes");
  std::vector<double> g(noisy.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double s = std::abs(std::complex<double>(clean[k]));
    const double x = std::abs(std::complex<double>(noisy[k]));
    g[k] = std::min(1.0, s / (x + eps));
  }
  return g;
}

template <class Real>
class Engine {
 public:
  using Complex = std::complex<Real>;
  using FrameHook = std::function<void(std::size_t, std::span<const Complex>)>;

  // `model` may be null only in oracle-gain mode. It must outlive the engine.
  Engine(const EngineConfig& cfg, const model::TscnModel<Real>* model)
      : cfg_(cfg), model_(model), noisy_an_(), clean_an_(), synth_() {
    cfg_.Validate();
    Require(cfg_.oracle() || model_ != nullptr, ErrorKind::kInvalidArgument,
            "engine needs a model unless running in oracle-gain mode");
    const std::size_t bins = stft_.n_bins();
    if (model_) {
      Require(model_->config().bins == bins, ErrorKind::kShapeMismatch,
              "model bin count differs from the STFT");
      stream_ = std::make_unique<typename model::TscnModel<Real>::Stream>(model_->MakeStream());
    }
    if (cfg_.pp) post_ = std::make_unique<pp::PostProcessor>(cfg_.pp_config, bins);
    enhanced_.resize(bins);
    out_frame_.resize(bins);
  }

  // Called with every final output spectrum, in frame order.
  void set_frame_hook(FrameHook hook) { hook_ = std::move(hook); }

  // Pushes input samples (and, in oracle mode, the aligned clean samples).
  // Returns the output samples finalized by the frames this push completed.
  std::vector<Real> Push(std::span<const Real> noisy, std::span<const Real> clean = {}) {
    const auto t0 = Clock::now();
    if (cfg_.oracle()) {
      Require(clean.size() == noisy.size(), ErrorKind::kShapeMismatch,
              "oracle mode needs clean samples aligned with the noisy chunk");
    }
    const auto frames = noisy_an_.Push(noisy);
    std::vector<typename dsp::StreamingAnalyzer<Real>::Frame> clean_frames;
    if (cfg_.oracle()) clean_frames = clean_an_.Push(clean);
    std::vector<Real> out;
    auto mark = t0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto chunk =
          ProcessFrame(frames[i], cfg_.oracle() ? std::span<const Complex>(clean_frames[i])
                                                : std::span<const Complex>());
      out.insert(out.end(), chunk.begin(), chunk.end());
      const auto now = Clock::now();
      frame_ms_.push_back(std::chrono::duration<double, std::milli>(now - mark).count());
      mark = now;
    }
    return out;
  }

  // Releases the synthesis tail after the last frame.
  std::vector<Real> Finish() {
    auto tail = synth_.Flush();
    CheckFinite(std::span<const Real>(tail), frame_index_, "synthesis tail");
    return tail;
  }

  std::size_t frames() const noexcept { return frame_index_; }
  const std::vector<double>& frame_ms() const noexcept { return frame_ms_; }
  LatencyReport latency() const { return LatencyReport::FromTimings(frame_ms_, stft_); }
  const pp::PostProcessor* post_processor() const noexcept { return post_.get(); }

 private:
  using Clock = std::chrono::steady_clock;

  std::vector<Real> ProcessFrame(std::span<const Complex> noisy, std::span<const Complex> clean) {
    const std::size_t t = frame_index_;
    const std::size_t bins = noisy.size();
    CheckFinite(noisy, t, "input spectrum");
    if (cfg_.oracle()) {
      const auto g = OracleGain(clean, noisy, cfg_.oracle_epsilon);
      for (std::size_t k = 0; k < bins; ++k) enhanced_[k] = noisy[k] * static_cast<Real>(g[k]);
    } else {
      model_->Step(*stream_, noisy, net_, cfg_.stage == 2);
      CheckFinite(std::span<const Real>(net_.est_mag), t, "stage 1");
      const auto& src = cfg_.stage == 2 ? net_.refined : net_.ccs;
      CheckFinite(std::span<const Complex>(src), t, cfg_.stage == 2 ? "stage 2" : "stage 1");
      std::copy(src.begin(), src.end(), enhanced_.begin());
    }
    std::span<const Complex> final_frame = enhanced_;
    if (post_) {
      post_->Process<Real>(enhanced_, noisy, out_frame_);
      CheckFinite(std::span<const Complex>(out_frame_), t, "post-processing");
      final_frame = out_frame_;
    }
    if (hook_) hook_(t, final_frame);
    auto samples = synth_.Push(final_frame);
    CheckFinite(std::span<const Real>(samples), t, "synthesis");
    ++frame_index_;
    return samples;
  }

  template <class T>
  static void CheckFinite(std::span<const T> v, std::size_t frame, const char* where) {
    for (const auto& x : v) {
      bool ok;
      if constexpr (std::is_floating_point_v<T>) {
        ok = std::isfinite(x);
      } else {
        ok = std::isfinite(x.real()) && std::isfinite(x.imag());
      }
      if (!ok) {
        Fail(ErrorKind::kNumerical,
             "non-finite value in frame " + std::to_string(frame) + " (" + where + ")");
      }
    }
  }

  EngineConfig cfg_;
  dsp::StftConfig stft_;
  const model::TscnModel<Real>* model_;
  std::unique_ptr<typename model::TscnModel<Real>::Stream> stream_;
  std::unique_ptr<pp::PostProcessor> post_;
  dsp::StreamingAnalyzer<Real> noisy_an_;
  dsp::StreamingAnalyzer<Real> clean_an_;
  dsp::StreamingSynthesizer<Real> synth_;
  model::TscnFrame<Real> net_;
  std::vector<Complex> enhanced_;
  std::vector<Complex> out_frame_;
  std::vector<double> frame_ms_;
  std::size_t frame_index_ = 0;
  FrameHook hook_;
};

// Loads the parameter store named by the config: a weight file or a seeded
// initialization of the full model layout.
inline nn::ParamStore LoadModelParams(const EngineConfig& cfg,
                                      const model::ModelConfig& mcfg = model::ModelConfig::Full()) {
  const auto layout = model::ModelLayout(mcfg);
  if (cfg.weights_path) return nn::LoadParams(*cfg.weights_path, &layout);
  Require(cfg.seed.has_value(), ErrorKind::kUsage, "no weights or seed given");
  return nn::InitParams(layout, *cfg.seed);
}

template <class Real>
struct EnhanceResult {
  dsp::Wave<Real> output;
  LatencyReport latency;
};

// Runs a whole signal through an engine in hop-sized chunks, as a live
// stream would arrive. Output covers every sample of the last complete
// frame: (T - 1) * hop + win_len samples for T frames.
template <class Real>
EnhanceResult<Real> EnhanceWave(const EngineConfig& cfg, const model::TscnModel<Real>* model,
                                const dsp::Wave<Real>& noisy, const dsp::Wave<Real>* clean = nullptr,
                                std::ostream* spectra = nullptr) {
  Engine<Real> engine(cfg, model);
  if (cfg.oracle()) {
    Require(clean != nullptr, ErrorKind::kInvalidArgument, "oracle mode needs a clean reference");
    Require(clean->size() == noisy.size(), ErrorKind::kShapeMismatch,
            "clean reference has " + std::to_string(clean->size()) + " samples, input has " +
                std::to_string(noisy.size()));
  }
  std::unique_ptr<SpectraCsvWriter> writer;
  if (spectra) {
    writer = std::make_unique<SpectraCsvWriter>(*spectra);
    engine.set_frame_hook([&](std::size_t, std::span<const std::complex<Real>> f) {
      writer->Write(f);
    });
  }
  const std::size_t hop = dsp::StftConfig{}.hop;
  EnhanceResult<Real> r;
  r.output.sample_rate = noisy.sample_rate;
  for (std::size_t pos = 0; pos < noisy.size(); pos += hop) {
    const std::size_t n = std::min(hop, noisy.size() - pos);
    const std::span<const Real> x(noisy.samples.data() + pos, n);
    const std::span<const Real> s =
        clean ? std::span<const Real>(clean->samples.data() + pos, n) : std::span<const Real>();
    const auto y = engine.Push(x, cfg.oracle() ? s : std::span<const Real>());
    r.output.samples.insert(r.output.samples.end(), y.begin(), y.end());
  }
  if (engine.frames() > 0) {
    const auto tail = engine.Finish();
    r.output.samples.insert(r.output.samples.end(), tail.begin(), tail.end());
  }
  r.latency = engine.latency();
  return r;
}

template <class Real>
LatencyReport RunEnhanceAs(const EngineConfig& cfg, const std::string& in_path,
                           const std::string& out_path) {
  cfg.Validate();
  const auto noisy = ReadWav<Real>(in_path);
  std::optional<dsp::Wave<Real>> clean;
  if (cfg.oracle()) clean = ReadWav<Real>(*cfg.oracle_gain);
  std::optional<nn::ParamStore> store;
  std::optional<model::TscnModel<Real>> net;
  if (!cfg.oracle()) {
    store = LoadModelParams(cfg);
    net.emplace(model::ModelConfig::Full(), *store);
  }
  std::ofstream spectra;
  if (cfg.dump_spectra) {
    spectra.open(*cfg.dump_spectra);
    Require(static_cast<bool>(spectra), ErrorKind::kIo,
            "cannot write '" + *cfg.dump_spectra + "'");
  }
  const auto r = EnhanceWave<Real>(cfg, net ? &*net : nullptr, noisy, clean ? &*clean : nullptr,
                                   cfg.dump_spectra ? &spectra : nullptr);
  if (cfg.dump_spectra) {
    spectra.flush();
    Require(static_cast<bool>(spectra), ErrorKind::kIo,
            "write failed for '" + *cfg.dump_spectra + "'");
  }
  WriteWav(out_path, r.output);
  return r.latency;
}

inline LatencyReport RunEnhance(const EngineConfig& cfg, const std::string& in_path,
                                const std::string& out_path) {
  return cfg.precision == Precision::kSingle ? RunEnhanceAs<float>(cfg, in_path, out_path)
                                             : RunEnhanceAs<double>(cfg, in_path, out_path);
}

}  // namespace tscn::pipeline
