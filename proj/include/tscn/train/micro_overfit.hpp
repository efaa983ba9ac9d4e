// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Gradient-free overfitting harness for the micro configuration. Used to
// check that the losses, both stages and the parameter plumbing can be
// optimized end to end without a training framework.
//
// Optimizer: simultaneous-perturbation finite differences (SPSA). Each step
// draws a Rademacher direction d, estimates g = (L(w + c d) - L(w - c d)) / 2c
// and tries w' = w - a g d. The candidate is kept only if it lowers the
// objective; the step size a grows on success and shrinks on failure. Three
// loss evaluations per step.
//
// Phase 1 trains the stage-1 parameters on L_cm alone. Phase 2 trains every
// parameter on the joint loss.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/core/random.hpp"
#include "tscn/dsp/stft.hpp"
#include "tscn/model/tscn.hpp"
#include "tscn/nn/params.hpp"
#include "tscn/train/losses.hpp"

namespace tscn::train {

struct OverfitConfig {
  std::size_t frames = 20;
  std::size_t steps = 200;          // total, both phases
  std::size_t pretrain_steps = 60;  // phase 1 share
  std::uint64_t seed = 1;
  double noise_level = 0.5;   // noisy = clean + noise_level * complex N(0, 1)
  double perturbation = 1e-3;
  double step_size = 1e-2;
  double grow = 1.3;
  double shrink = 0.5;
  LossConfig loss{.reduction = Reduction::kMean};

  void Validate() const {
    Require(frames > 0 && steps > 0, ErrorKind::kInvalidArgument, "overfit needs frames and steps");
    Require(pretrain_steps <= steps, ErrorKind::kInvalidArgument,
            "pretrain_steps exceeds total steps");
    Require(perturbation > 0 && step_size > 0 && grow >= 1 && shrink > 0 && shrink < 1,
            ErrorKind::kInvalidArgument, "bad optimizer constants");
    Require(noise_level >= 0, ErrorKind::kInvalidArgument, "noise_level must be >= 0");
    loss.Validate();
  }
};

struct SpectralPair {
  dsp::ComplexSpectrogram<double> noisy;
  dsp::ComplexSpectrogram<double> clean;
  Matrix<double> clean_mag;
};

// Harmonic-ish clean magnitudes with random phases; white complex noise.
inline SpectralPair MakeSyntheticPair(std::size_t frames, std::size_t bins, std::uint64_t seed,
                                      double noise_level) {
  Rng rng(seed);
  SpectralPair p{{frames, bins}, {frames, bins}, Matrix<double>(frames, bins)};
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double mag = 1.0 + 0.6 * std::sin(0.9 * static_cast<double>(k) +
                                              0.35 * static_cast<double>(t));
      const double ph = rng.Uniform(-std::numbers::pi, std::numbers::pi);
      const double re = mag * std::cos(ph), im = mag * std::sin(ph);
      p.clean.real(t, k) = re;
      p.clean.imag(t, k) = im;
      p.clean_mag(t, k) = mag;
      p.noisy.real(t, k) = re + noise_level * rng.Normal();
      p.noisy.imag(t, k) = im + noise_level * rng.Normal();
    }
  }
  return p;
}

struct TrajectoryPoint {
  std::size_t step = 0;
  int phase = 0;  // 0: initial, 1: stage-1 pretraining, 2: joint
  bool accepted = false;
  LossReport loss;
};

struct OverfitResult {
  std::vector<TrajectoryPoint> trajectory;
  nn::ParamStore params;
  double initial_joint = 0;
  double final_joint = 0;

  double reduction() const { return initial_joint > 0 ? 1.0 - final_joint / initial_joint : 0.0; }
};

inline LossReport EvaluateLoss(const model::ModelConfig& mcfg, const nn::ParamStore& store,
                               const SpectralPair& data, const LossConfig& lcfg) {
  const model::TscnModel<double> net(mcfg, store);
  const auto out = net.Forward(data.noisy, true);
  const auto rep = LossJoint(out.refined, data.clean, out.est_mag, data.clean_mag, lcfg);
  Require(std::isfinite(rep.l_total) && std::isfinite(rep.l_cm), ErrorKind::kNumerical,
          "non-finite loss during overfit");
  return rep;
}

inline void WriteTrajectoryCsv(std::ostream& os, const std::vector<TrajectoryPoint>& traj) {
  os << "step,phase,accepted,l_cm,l_ri,l_mag,l_total\n";
  os.precision(10);
  for (const auto& p : traj) {
    os << p.step << ',' << p.phase << ',' << (p.accepted ? 1 : 0) << ',' << p.loss.l_cm << ','
       << p.loss.l_ri << ',' << p.loss.l_mag << ',' << p.loss.l_total << '\n';
  }
}

class MicroOverfit {
 public:
  MicroOverfit(const OverfitConfig& cfg, const model::ModelConfig& mcfg = model::ModelConfig::Micro())
      : cfg_(cfg), mcfg_(mcfg) {
    cfg_.Validate();
    mcfg_.Validate();
  }

  OverfitResult Run(const SpectralPair& data) const {
    OverfitResult res;
    res.params = nn::InitParams(model::ModelLayout(mcfg_), cfg_.seed);
    Rng rng(cfg_.seed ^ 0x5eed5eedULL);

    LossReport cur = Eval(res.params, data);
    res.initial_joint = cur.l_total;
    res.trajectory.push_back({0, 0, true, cur});

    for (int phase = 1; phase <= 2; ++phase) {
      const std::size_t n_steps =
          phase == 1 ? cfg_.pretrain_steps : cfg_.steps - cfg_.pretrain_steps;
      auto active = Active(res.params, phase == 1 ? "cme." : "");
      const auto objective = [phase](const LossReport& r) {
        return phase == 1 ? r.l_cm : r.l_total;
      };
      double a = cfg_.step_size;
      std::size_t n_active = 0;
      for (const auto& slot : active) n_active += slot.size;
      std::vector<double> dir(n_active);
      for (std::size_t s = 0; s < n_steps; ++s) {
        for (auto& d : dir) d = rng.Sign();
        const auto base = Snapshot(active);
        Apply(active, base, dir, cfg_.perturbation);
        const double lp = objective(Eval(res.params, data));
        Apply(active, base, dir, -cfg_.perturbation);
        const double lm = objective(Eval(res.params, data));
        const double g = (lp - lm) / (2.0 * cfg_.perturbation);
        Apply(active, base, dir, -a * g);
        const LossReport cand = Eval(res.params, data);
        const bool accept = objective(cand) < objective(cur);
        if (accept) {
          cur = cand;
          a *= cfg_.grow;
        } else {
          Restore(active, base);
          a *= cfg_.shrink;
        }
        res.trajectory.push_back({res.trajectory.size(), phase, accept, cur});
      }
    }
    res.final_joint = cur.l_total;
    return res;
  }

  const OverfitConfig& config() const noexcept { return cfg_; }
  const model::ModelConfig& model_config() const noexcept { return mcfg_; }

 private:
  struct Slot {
    float* data;
    std::size_t size;
  };

  LossReport Eval(const nn::ParamStore& store, const SpectralPair& data) const {
    return EvaluateLoss(mcfg_, store, data, cfg_.loss);
  }

  static std::vector<Slot> Active(nn::ParamStore& store, const std::string& prefix) {
    std::vector<Slot> out;
    for (auto& [name, t] : store) {
      if (name.starts_with(prefix)) out.push_back({t.data().data(), t.size()});
    }
    return out;
  }

  static std::vector<float> Snapshot(const std::vector<Slot>& slots) {
    std::vector<float> v;
    for (const auto& s : slots) v.insert(v.end(), s.data, s.data + s.size);
    return v;
  }

  static void Restore(const std::vector<Slot>& slots, const std::vector<float>& base) {
    std::size_t i = 0;
    for (const auto& s : slots) {
      std::copy(base.begin() + static_cast<std::ptrdiff_t>(i),
                base.begin() + static_cast<std::ptrdiff_t>(i + s.size), s.data);
      i += s.size;
    }
  }

  // w = base + scale * dir, one direction entry per tensor element.
  static void Apply(const std::vector<Slot>& slots, const std::vector<float>& base,
                    const std::vector<double>& dir, double scale) {
    std::size_t i = 0, d = 0;
    for (const auto& s : slots) {
      for (std::size_t j = 0; j < s.size; ++j, ++i) {
        s.data[j] = static_cast<float>(base[i] + scale * dir[d++]);
      }
    }
  }

  OverfitConfig cfg_;
  model::ModelConfig mcfg_;
};

}  // namespace tscn::train
