// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/nn/layers.hpp"
#include "tscn/nn/params.hpp"

namespace tscn::nn {

// Group structure shared by the temporal modules: within a group of n units
// the r-th unit dilates by 2^r, and its complementary rate is 2^(n-1-r).
struct TcmGroupSpec {
  std::size_t units = 6;
  std::size_t outer = 256;  // residual stream width
  std::size_t inner = 64;   // bottleneck width
  std::size_t kernel = 3;   // taps along time

  std::size_t complementary_exponent() const { return units - 1; }
  std::size_t dilation(std::size_t r) const { return std::size_t{1} << r; }
  std::size_t complementary_dilation(std::size_t r) const {
    return std::size_t{1} << (complementary_exponent() - r);
  }
};

// Light-weight TCM: 1x1 compress -> gated dilated conv -> 1x1 expand, plus
// the residual path.
template <class Real>
class TcmLight {
 public:
  struct State {
    FrameHistory<Real> hist;  // compressed frames
    std::vector<Real> h, ab, g, y;
  };

  TcmLight() = default;
  TcmLight(const ParamStore& store, const std::string& prefix, std::size_t outer,
           std::size_t inner, std::size_t kernel, std::size_t dilation)
      : in_(store, prefix + ".in", outer, inner),
        in_norm_(store, prefix + ".in", inner),
        gate_(store, prefix + ".gate", inner, kernel, dilation),
        out_(store, prefix + ".out", inner, outer) {}

  static void AppendLayout(ParamLayout& layout, const std::string& prefix, std::size_t outer,
                           std::size_t inner, std::size_t kernel, std::size_t dilation) {
    Pointwise<Real>::AppendLayout(layout, prefix + ".in", outer, inner);
    AppendNormActLayout(layout, prefix + ".in", inner);
    GatedDilatedConv<Real>::AppendLayout(layout, prefix + ".gate", inner, kernel, dilation);
    Pointwise<Real>::AppendLayout(layout, prefix + ".out", inner, outer);
  }

  std::size_t width() const noexcept { return in_.in_ch(); }
  std::size_t left_context() const { return gate_.left_context(); }

  State MakeState() const {
    const std::size_t inner = in_.out_ch();
    return {FrameHistory<Real>(inner, gate_.left_context() + 1), std::vector<Real>(inner),
            std::vector<Real>(2 * inner), std::vector<Real>(inner),
            std::vector<Real>(width())};
  }

  // In place on a width() frame.
  void Step(State& st, std::span<Real> x) const {
    Require(x.size() == width(), ErrorKind::kShapeMismatch,
            "tcm expects " + std::to_string(width()) + " channels, got " +
                std::to_string(x.size()));
    in_.Apply(x, st.h);
    in_norm_.Apply(st.h);
    st.hist.Push(st.h);
    gate_.Apply(st.hist, st.ab, st.g);
    out_.Apply(st.g, st.y);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += st.y[i];
  }

 private:
  Pointwise<Real> in_;
  NormAct<Real> in_norm_;
  GatedDilatedConv<Real> gate_;
  Pointwise<Real> out_;
};

// Dual TCM: two gated dilated branches with complementary rates over a shared
// compressed input; branch outputs are concatenated (branch a first) before
// the expanding 1x1 conv.
template <class Real>
class Dtcm {
 public:
  struct State {
    FrameHistory<Real> hist;
    std::vector<Real> h, ab, g, y;
  };

  Dtcm() = default;
  Dtcm(const ParamStore& store, const std::string& prefix, std::size_t outer,
       std::size_t inner, std::size_t kernel, std::size_t dilation_a, std::size_t dilation_b)
      : in_(store, prefix + ".in", outer, inner),
        in_norm_(store, prefix + ".in", inner),
        branch_a_(store, prefix + ".a", inner, kernel, dilation_a),
        branch_b_(store, prefix + ".b", inner, kernel, dilation_b),
        out_(store, prefix + ".out", 2 * inner, outer) {}

  static void AppendLayout(ParamLayout& layout, const std::string& prefix, std::size_t outer,
                           std::size_t inner, std::size_t kernel, std::size_t dilation_a,
                           std::size_t dilation_b) {
    Pointwise<Real>::AppendLayout(layout, prefix + ".in", outer, inner);
    AppendNormActLayout(layout, prefix + ".in", inner);
    GatedDilatedConv<Real>::AppendLayout(layout, prefix + ".a", inner, kernel, dilation_a);
    GatedDilatedConv<Real>::AppendLayout(layout, prefix + ".b", inner, kernel, dilation_b);
    Pointwise<Real>::AppendLayout(layout, prefix + ".out", 2 * inner, outer);
  }

  std::size_t width() const noexcept { return in_.in_ch(); }
  std::size_t left_context() const {
    return std::max(branch_a_.left_context(), branch_b_.left_context());
  }

  State MakeState() const {
    const std::size_t inner = in_.out_ch();
    return {FrameHistory<Real>(inner, left_context() + 1), std::vector<Real>(inner),
            std::vector<Real>(2 * inner), std::vector<Real>(2 * inner),
            std::vector<Real>(width())};
  }

  void Step(State& st, std::span<Real> x) const {
    Require(x.size() == width(), ErrorKind::kShapeMismatch,
            "dtcm expects " + std::to_string(width()) + " channels, got " +
                std::to_string(x.size()));
    const std::size_t inner = in_.out_ch();
    in_.Apply(x, st.h);
    in_norm_.Apply(st.h);
    st.hist.Push(st.h);
    std::span<Real> g(st.g);
    branch_a_.Apply(st.hist, st.ab, g.first(inner));
    branch_b_.Apply(st.hist, st.ab, g.last(inner));
    out_.Apply(st.g, st.y);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += st.y[i];
  }

 private:
  Pointwise<Real> in_;
  NormAct<Real> in_norm_;
  GatedDilatedConv<Real> branch_a_;
  GatedDilatedConv<Real> branch_b_;
  Pointwise<Real> out_;
};

}  // namespace tscn::nn
