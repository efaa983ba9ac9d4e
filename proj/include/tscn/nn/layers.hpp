// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Frame-stepped causal layers. Every layer consumes one time frame per call
// and keeps whatever past frames it needs in a per-stream State, so a batch
// forward pass is just a loop of Step() calls and streaming inference is
// bit-identical to it.
//
// Activations are channel-last: a frame of F frequency bins and C channels is
// stored as data[f * C + c]. Stored weights use the conventional layouts
//   conv:       [C_out, C_in, K_t, K_f]   (tap K_t-1 is the current frame)
//   transposed: [C_in, C_out, K_t, K_f]   (tap 0 is the current frame)
// and are repacked to [K_t][K_f][C_in][C_out] on construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/core/tensor.hpp"
#include "tscn/nn/params.hpp"

namespace tscn::nn {

// Fixed-depth ring of the most recent frames. Frames older than the first
// push read as zeros, which is the causal left padding.
template <class Real>
class FrameHistory {
 public:
  FrameHistory() = default;
  FrameHistory(std::size_t frame_size, std::size_t depth)
      : frame_size_(frame_size), depth_(depth), data_(frame_size * depth, Real(0)) {}

  void Push(std::span<const Real> frame) {
    head_ = (head_ + 1) % depth_;
    std::copy(frame.begin(), frame.end(), data_.begin() + head_ * frame_size_);
  }

  // k = 0 is the most recent frame.
  std::span<const Real> Lag(std::size_t k) const {
    const std::size_t slot = (head_ + depth_ - k % depth_) % depth_;
    return {data_.data() + slot * frame_size_, frame_size_};
  }

  std::size_t depth() const noexcept { return depth_; }
  std::size_t frame_size() const noexcept { return frame_size_; }

 private:
  std::size_t frame_size_ = 0;
  std::size_t depth_ = 1;
  std::size_t head_ = 0;
  std::vector<Real> data_;
};

struct ConvGeometry {
  std::size_t in_ch = 1;
  std::size_t out_ch = 1;
  std::size_t kernel_t = 1;
  std::size_t kernel_f = 1;
  std::size_t stride_f = 1;
  std::size_t dilation_t = 1;
  bool transposed = false;
  std::size_t output_padding = 0;  // transposed only

  Shape weight_shape() const {
    return transposed ? Shape{in_ch, out_ch, kernel_t, kernel_f}
                      : Shape{out_ch, in_ch, kernel_t, kernel_f};
  }

  std::size_t OutFreq(std::size_t in_freq) const {
    if (transposed) return (in_freq - 1) * stride_f + kernel_f + output_padding;
    Require(in_freq >= kernel_f, ErrorKind::kShapeMismatch,
            "frequency axis shorter than kernel");
    return (in_freq - kernel_f) / stride_f + 1;
  }

  // Past frames (beyond the current one) the layer reads.
  std::size_t left_context() const { return (kernel_t - 1) * dilation_t; }
};

inline std::size_t ConvOutFreq(std::size_t in_freq, std::size_t kernel,
                               std::size_t stride) {
  return (in_freq - kernel) / stride + 1;
}

inline void AppendConvLayout(ParamLayout& layout, const std::string& prefix,
                             const ConvGeometry& g) {
  const std::size_t taps = g.kernel_t * g.kernel_f;
  layout.push_back({prefix + ".weight", g.weight_shape(),
                    XavierUniform{g.in_ch * taps, g.out_ch * taps}});
  layout.push_back({prefix + ".bias", {g.out_ch}, FanInUniform{g.in_ch * taps}});
}

inline void AppendNormActLayout(ParamLayout& layout, const std::string& prefix,
                                std::size_t channels) {
  layout.push_back({prefix + ".norm.gamma", {channels}, Constant{1.0f}});
  layout.push_back({prefix + ".norm.beta", {channels}, Constant{0.0f}});
  layout.push_back({prefix + ".prelu.alpha", {channels}, Constant{0.25f}});
}

namespace detail {

// Lane groups as wide as the target's vector registers (GCC/Clang vector
// extension).
#if defined(__AVX512F__)
inline constexpr std::size_t kVecBytes = 64;
#else
inline constexpr std::size_t kVecBytes = 32;
#endif

template <class Real>
struct Simd;
template <>
struct Simd<float> {
  typedef float Vec __attribute__((vector_size(kVecBytes)));
};
template <>
struct Simd<double> {
  typedef double Vec __attribute__((vector_size(kVecBytes)));
};

}  // namespace detail

// One or more same-geometry convolutions evaluated in a single pass; their
// output channels are laid side by side (conv 0 first).
template <class Real>
class CausalConv2d {
 public:
  CausalConv2d() = default;

  CausalConv2d(const ParamStore& store, const std::vector<std::string>& prefixes,
               const ConvGeometry& g)
      : g_(g), total_out_(g.out_ch * prefixes.size()) {
    Require(g.kernel_t >= 1 && g.kernel_f >= 1 && g.stride_f >= 1 && g.dilation_t >= 1,
            ErrorKind::kInvalidArgument, "degenerate convolution geometry");
    packed_.assign(g.kernel_t * g.kernel_f * g.in_ch * total_out_, Real(0));
    bias_.assign(total_out_, Real(0));
    for (std::size_t p = 0; p < prefixes.size(); ++p) {
      const auto& w = store.Get(prefixes[p] + ".weight", g.weight_shape());
      const auto& b = store.Get(prefixes[p] + ".bias", {g.out_ch});
      for (std::size_t co = 0; co < g.out_ch; ++co) {
        bias_[p * g.out_ch + co] = static_cast<Real>(b[co]);
        for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
          for (std::size_t kt = 0; kt < g.kernel_t; ++kt) {
            for (std::size_t kf = 0; kf < g.kernel_f; ++kf) {
              const std::size_t src =
                  g.transposed
                      ? ((ci * g.out_ch + co) * g.kernel_t + kt) * g.kernel_f + kf
                      : ((co * g.in_ch + ci) * g.kernel_t + kt) * g.kernel_f + kf;
              packed_[PackedIndex(kt, kf, ci) + p * g.out_ch + co] =
                  static_cast<Real>(w[src]);
            }
          }
        }
      }
    }
  }

  const ConvGeometry& geometry() const noexcept { return g_; }
  std::size_t total_out() const noexcept { return total_out_; }
  std::size_t history_depth() const { return g_.left_context() + 1; }

  // `hist` holds input frames of in_freq x in_ch; `out` receives
  // OutFreq(in_freq) x total_out().
  void Apply(const FrameHistory<Real>& hist, std::size_t in_freq,
             std::span<Real> out) const {
    const std::size_t ci_n = g_.in_ch;
    const std::size_t co_n = total_out_;
    const std::size_t out_freq = g_.OutFreq(in_freq);
    Require(hist.frame_size() == in_freq * ci_n, ErrorKind::kShapeMismatch,
            "conv input frame size");
    Require(out.size() == out_freq * co_n, ErrorKind::kShapeMismatch,
            "conv output frame size");
    Require(g_.kernel_t * g_.kernel_f <= kMaxTaps, ErrorKind::kInvalidArgument,
            "kernel too large");
    // Gather form: output bins with the same set of (k_t, k_f) taps share
    // every weight load, so they are reduced together in groups of up to
    // kBins. The channel-block loop is outermost so one block's weights stay
    // in cache across all groups.
    const std::size_t classes = g_.transposed ? g_.stride_f : 1;
    std::vector<Group> groups;
    groups.reserve(out_freq / kBins + 2 * classes + 1);
    Group cur;
    for (std::size_t cls = 0; cls < classes; ++cls) {
      for (std::size_t fo = cls; fo < out_freq; fo += classes) {
        cur.n_taps = 0;
        for (std::size_t kt = 0; kt < g_.kernel_t; ++kt) {
          const std::size_t lag =
              g_.transposed ? kt * g_.dilation_t : (g_.kernel_t - 1 - kt) * g_.dilation_t;
          const Real* x = hist.Lag(lag).data();
          for (std::size_t kf = 0; kf < g_.kernel_f; ++kf) {
            std::size_t fi = 0;
            if (g_.transposed) {
              if (fo < kf || (fo - kf) % g_.stride_f != 0) continue;
              fi = (fo - kf) / g_.stride_f;
              if (fi >= in_freq) continue;
            } else {
              fi = fo * g_.stride_f + kf;
            }
            cur.w[cur.n_taps] = packed_.data() + PackedIndex(kt, kf, 0);
            cur.x[cur.n_taps][0] = x + fi * ci_n;
            ++cur.n_taps;
          }
        }
        Group* last = groups.empty() ? nullptr : &groups.back();
        const bool joins = last != nullptr && fo >= classes && last->n_bins < kBins &&
                           last->n_taps == cur.n_taps &&
                           std::equal(cur.w.begin(), cur.w.begin() + cur.n_taps,
                                      last->w.begin()) &&
                           last->o[last->n_bins - 1] == out.data() + (fo - classes) * co_n;
        if (!joins) {
          cur.n_bins = 0;
          groups.push_back(cur);
          last = &groups.back();
        }
        for (std::size_t t = 0; t < cur.n_taps; ++t) last->x[t][last->n_bins] = cur.x[t][0];
        last->o[last->n_bins++] = out.data() + fo * co_n;
      }
    }
    std::size_t cb = 0;
    for (; cb + kBlock <= co_n; cb += kBlock) {
      for (const Group& grp : groups) {
        switch (grp.n_bins) {
          case 1: ReduceBlock<1>(grp, cb); break;
          case 2: ReduceBlock<2>(grp, cb); break;
          case 3: ReduceBlock<3>(grp, cb); break;
          default: ReduceBlock<4>(grp, cb); break;
        }
      }
    }
    for (; cb < co_n; ++cb) {
      for (const Group& grp : groups) {
        for (std::size_t n = 0; n < grp.n_bins; ++n) {
          Real acc = bias_[cb];
          for (std::size_t t = 0; t < grp.n_taps; ++t) {
            const Real* x = grp.x[t][n];
            const Real* w = grp.w[t] + cb;
            for (std::size_t ci = 0; ci < ci_n; ++ci) acc += x[ci] * w[ci * co_n];
          }
          grp.o[n][cb] = acc;
        }
      }
    }
  }

 private:
  static constexpr std::size_t kMaxTaps = 16;
  static constexpr std::size_t kBins = 4;

  // Output bins sharing one tap pattern.
  struct Group {
    std::size_t n_taps = 0;
    std::size_t n_bins = 0;
    std::array<const Real*, kMaxTaps> w{};
    std::array<std::array<const Real*, kBins>, kMaxTaps> x{};
    std::array<Real*, kBins> o{};
  };

  std::size_t PackedIndex(std::size_t kt, std::size_t kf, std::size_t ci) const {
    return ((kt * g_.kernel_f + kf) * g_.in_ch + ci) * total_out_;
  }

  using Vec = typename detail::Simd<Real>::Vec;
  static constexpr std::size_t kLanes = sizeof(Vec) / sizeof(Real);
  static constexpr std::size_t kBlock = 2 * kLanes;

  static Vec LoadVec(const Real* p) {
    Vec v;
    std::memcpy(&v, p, sizeof(Vec));
    return v;
  }
  static void StoreVec(Real* p, Vec v) { std::memcpy(p, &v, sizeof(Vec)); }

  // o[n][cb + j] = bias + sum over taps and ci of x[n][ci] * w[ci][cb + j]
  template <std::size_t NB>
  void ReduceBlock(const Group& grp, std::size_t cb) const {
    const std::size_t co_n = total_out_;
    const std::size_t ci_n = g_.in_ch;
    const Vec b0 = LoadVec(bias_.data() + cb);
    const Vec b1 = LoadVec(bias_.data() + cb + kLanes);
    Vec acc0[NB], acc1[NB];
#pragma GCC unroll 4
    for (std::size_t n = 0; n < NB; ++n) {
      acc0[n] = b0;
      acc1[n] = b1;
    }
    for (std::size_t t = 0; t < grp.n_taps; ++t) {
      const Real* w = grp.w[t] + cb;
      const Real* x[NB];
#pragma GCC unroll 4
      for (std::size_t n = 0; n < NB; ++n) x[n] = grp.x[t][n];
      for (std::size_t ci = 0; ci < ci_n; ++ci, w += co_n) {
        const Vec w0 = LoadVec(w);
        const Vec w1 = LoadVec(w + kLanes);
#pragma GCC unroll 4
        for (std::size_t n = 0; n < NB; ++n) {
          const Vec a = x[n][ci] - Vec{};  // broadcast
          acc0[n] += a * w0;
          acc1[n] += a * w1;
        }
      }
    }
#pragma GCC unroll 4
    for (std::size_t n = 0; n < NB; ++n) {
      StoreVec(grp.o[n] + cb, acc0[n]);
      StoreVec(grp.o[n] + cb + kLanes, acc1[n]);
    }
  }

  ConvGeometry g_;
  std::size_t total_out_ = 0;
  std::vector<Real> packed_;
  std::vector<Real> bias_;
};

// 1x1 convolution on a single-bin frame (a plain affine map).
template <class Real>
class Pointwise {
 public:
  Pointwise() = default;
  Pointwise(const ParamStore& store, const std::string& prefix, std::size_t in_ch,
            std::size_t out_ch)
      : in_ch_(in_ch), out_ch_(out_ch), w_(in_ch * out_ch), b_(out_ch) {
    const auto& w = store.Get(prefix + ".weight", {out_ch, in_ch, 1, 1});
    const auto& b = store.Get(prefix + ".bias", {out_ch});
    for (std::size_t co = 0; co < out_ch; ++co) {
      b_[co] = static_cast<Real>(b[co]);
      for (std::size_t ci = 0; ci < in_ch; ++ci) {
        w_[ci * out_ch + co] = static_cast<Real>(w[co * in_ch + ci]);
      }
    }
  }

  static void AppendLayout(ParamLayout& layout, const std::string& prefix,
                           std::size_t in_ch, std::size_t out_ch) {
    AppendConvLayout(layout, prefix, ConvGeometry{.in_ch = in_ch, .out_ch = out_ch});
  }

  std::size_t in_ch() const noexcept { return in_ch_; }
  std::size_t out_ch() const noexcept { return out_ch_; }

  // Applies the map independently to each of the `rows` frames in `in`.
  void Apply(std::span<const Real> in, std::span<Real> out, std::size_t rows = 1) const {
    Require(in.size() == rows * in_ch_ && out.size() == rows * out_ch_,
            ErrorKind::kShapeMismatch, "pointwise conv channel mismatch");
    for (std::size_t r = 0; r < rows; ++r) {
      Real* o = out.data() + r * out_ch_;
      const Real* x = in.data() + r * in_ch_;
      std::size_t cb = 0;
      for (; cb + 4 * kLanes <= out_ch_; cb += 4 * kLanes) Block<4>(x, cb, o);
      for (; cb + kLanes <= out_ch_; cb += kLanes) Block<1>(x, cb, o);
      for (; cb < out_ch_; ++cb) {
        Real acc = b_[cb];
        for (std::size_t ci = 0; ci < in_ch_; ++ci) acc += x[ci] * w_[ci * out_ch_ + cb];
        o[cb] = acc;
      }
    }
  }

 private:
  using Vec = typename detail::Simd<Real>::Vec;
  static constexpr std::size_t kLanes = sizeof(Vec) / sizeof(Real);

  template <std::size_t NV>
  void Block(const Real* x, std::size_t cb, Real* o) const {
    Vec acc[NV];
#pragma GCC unroll 4
    for (std::size_t v = 0; v < NV; ++v) std::memcpy(&acc[v], &b_[cb + v * kLanes], sizeof(Vec));
    const Real* w = w_.data() + cb;
    for (std::size_t ci = 0; ci < in_ch_; ++ci, w += out_ch_) {
      const Vec a = x[ci] - Vec{};  // broadcast
#pragma GCC unroll 4
      for (std::size_t v = 0; v < NV; ++v) {
        Vec wv;
        std::memcpy(&wv, w + v * kLanes, sizeof(Vec));
        acc[v] += a * wv;
      }
    }
#pragma GCC unroll 4
    for (std::size_t v = 0; v < NV; ++v) {
      const Vec r = acc[v];
      std::memcpy(o + cb + v * kLanes, &r, sizeof(Vec));
    }
  }

  std::size_t in_ch_ = 0;
  std::size_t out_ch_ = 0;
  std::vector<Real> w_;
  std::vector<Real> b_;
};

inline constexpr double kLayerNormEps = 1e-5;

// Per-frame layer normalization (statistics over all bins and channels of one
// time step) with per-channel affine, followed by per-channel PReLU.
template <class Real>
class NormAct {
 public:
  NormAct() = default;
  NormAct(const ParamStore& store, const std::string& prefix, std::size_t channels)
      : gamma_(Load(store, prefix + ".norm.gamma", channels)),
        beta_(Load(store, prefix + ".norm.beta", channels)),
        alpha_(Load(store, prefix + ".prelu.alpha", channels)) {}

  std::size_t channels() const noexcept { return gamma_.size(); }

  void Apply(std::span<Real> frame) const {
    const std::size_t c_n = gamma_.size();
    Require(c_n > 0 && frame.size() % c_n == 0, ErrorKind::kShapeMismatch,
            "norm channel mismatch");
    // Single pass in double with independent partial sums.
    constexpr std::size_t kParts = 8;
    double s1[kParts] = {}, s2[kParts] = {};
    const std::size_t n = frame.size();
    std::size_t i = 0;
    for (; i + kParts <= n; i += kParts) {
      for (std::size_t j = 0; j < kParts; ++j) {
        const double v = frame[i + j];
        s1[j] += v;
        s2[j] += v * v;
      }
    }
    for (; i < n; ++i) {
      s1[0] += frame[i];
      s2[0] += static_cast<double>(frame[i]) * frame[i];
    }
    double sum = 0, sq = 0;
    for (std::size_t j = 0; j < kParts; ++j) {
      sum += s1[j];
      sq += s2[j];
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(sq / static_cast<double>(n) - mean * mean, 0.0);
    const Real m = static_cast<Real>(mean);
    const Real inv = static_cast<Real>(1.0 / std::sqrt(var + kLayerNormEps));
    for (std::size_t f = 0; f < n; f += c_n) {
      Real* row = frame.data() + f;
      for (std::size_t c = 0; c < c_n; ++c) {
        const Real y = (row[c] - m) * inv * gamma_[c] + beta_[c];
        row[c] = y >= 0 ? y : alpha_[c] * y;
      }
    }
  }

 private:
  static std::vector<Real> Load(const ParamStore& store, const std::string& name,
                                std::size_t n) {
    const auto& t = store.Get(name, {n});
    return std::vector<Real>(t.vec().begin(), t.vec().end());
  }

  std::vector<Real> gamma_;
  std::vector<Real> beta_;
  std::vector<Real> alpha_;
};

template <class Real>
inline Real Sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

namespace detail {

typedef float V8f __attribute__((vector_size(32)));
typedef std::int32_t V8i __attribute__((vector_size(32)));

// exp(x) on eight lanes: x = n ln2 + r with round-to-nearest n, |r| <= ln2/2,
// then a degree-6 polynomial. Relative error below 1e-7 on [-87, 88].
inline V8f ExpFast(V8f x) {
  const V8f lo = V8f{} - 87.0f, hi = V8f{} + 88.0f;
  x = x < lo ? lo : x;
  x = x > hi ? hi : x;
  const V8f shift = V8f{} + 12582912.0f;  // 1.5 * 2^23 rounds to integer
  const V8f n = (x * 1.44269504088896341f + shift) - shift;
  V8f r = x - n * 0.693359375f;
  r = r - n * -2.12194440e-4f;
  V8f p = V8f{} + 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  p = p * r * r + r + 1.0f;
  const V8i bits = (__builtin_convertvector(n, V8i) + 127) << 23;
  V8f scale;
  std::memcpy(&scale, &bits, sizeof(scale));
  return p * scale;
}

}  // namespace detail

// out[f][c] = a[f][c] * sigmoid(b[f][c]) where `ab` holds a and b side by side
// per bin.
template <class Real>
inline void ApplyGate(std::span<const Real> ab, std::span<Real> out, std::size_t channels) {
  const std::size_t bins = out.size() / channels;
  for (std::size_t f = 0; f < bins; ++f) {
    const Real* a = ab.data() + f * 2 * channels;
    const Real* b = a + channels;
    Real* o = out.data() + f * channels;
    std::size_t c = 0;
    if constexpr (std::is_same_v<Real, float>) {
      using detail::V8f;
      for (; c + 8 <= channels; c += 8) {
        V8f va, vb;
        std::memcpy(&va, a + c, sizeof(V8f));
        std::memcpy(&vb, b + c, sizeof(V8f));
        const V8f vo = va / (1.0f + detail::ExpFast(-vb));
        std::memcpy(o + c, &vo, sizeof(V8f));
      }
    }
    for (; c < channels; ++c) o[c] = a[c] * Sigmoid(b[c]);
  }
}

// norm_act(conv_a(x) * sigmoid(conv_b(x))) for encoder (strided conv) and
// decoder (transposed conv) blocks.
template <class Real>
class GatedConvBlock {
 public:
  struct State {
    FrameHistory<Real> hist;
    std::vector<Real> ab;
  };

  GatedConvBlock() = default;
  GatedConvBlock(const ParamStore& store, const std::string& prefix,
                 const ConvGeometry& g, std::size_t in_freq)
      : conv_(store, {prefix + ".conv_a", prefix + ".conv_b"}, g),
        norm_(store, prefix, g.out_ch),
        in_freq_(in_freq),
        out_freq_(g.OutFreq(in_freq)) {}

  static void AppendLayout(ParamLayout& layout, const std::string& prefix,
                           const ConvGeometry& g) {
    AppendConvLayout(layout, prefix + ".conv_a", g);
    AppendConvLayout(layout, prefix + ".conv_b", g);
    AppendNormActLayout(layout, prefix, g.out_ch);
  }

  State MakeState() const {
    return {FrameHistory<Real>(in_freq_ * conv_.geometry().in_ch, conv_.history_depth()),
            std::vector<Real>(out_freq_ * conv_.total_out())};
  }

  std::size_t in_freq() const noexcept { return in_freq_; }
  std::size_t out_freq() const noexcept { return out_freq_; }
  std::size_t out_ch() const noexcept { return conv_.geometry().out_ch; }
  std::size_t out_size() const noexcept { return out_freq_ * out_ch(); }
  std::size_t left_context() const { return conv_.geometry().left_context(); }

  void Step(State& st, std::span<const Real> in, std::span<Real> out) const {
    st.hist.Push(in);
    conv_.Apply(st.hist, in_freq_, st.ab);
    ApplyGate<Real>(st.ab, out, out_ch());
    norm_.Apply(out);
  }

 private:
  CausalConv2d<Real> conv_;
  NormAct<Real> norm_;
  std::size_t in_freq_ = 0;
  std::size_t out_freq_ = 0;
};

// Gated dilated convolution along time on single-bin frames.
template <class Real>
class GatedDilatedConv {
 public:
  GatedDilatedConv() = default;
  GatedDilatedConv(const ParamStore& store, const std::string& prefix,
                   std::size_t channels, std::size_t kernel, std::size_t dilation)
      : conv_(store, {prefix + ".dconv_a", prefix + ".dconv_b"}, Geometry(channels, kernel, dilation)),
        norm_(store, prefix, channels) {}

  static ConvGeometry Geometry(std::size_t channels, std::size_t kernel, std::size_t dilation) {
    return {.in_ch = channels, .out_ch = channels, .kernel_t = kernel, .dilation_t = dilation};
  }

  static void AppendLayout(ParamLayout& layout, const std::string& prefix,
                           std::size_t channels, std::size_t kernel, std::size_t dilation) {
    const auto g = Geometry(channels, kernel, dilation);
    AppendConvLayout(layout, prefix + ".dconv_a", g);
    AppendConvLayout(layout, prefix + ".dconv_b", g);
    AppendNormActLayout(layout, prefix, channels);
  }

  std::size_t left_context() const { return conv_.geometry().left_context(); }
  std::size_t channels() const { return conv_.geometry().out_ch; }

  // `scratch` must hold 2 * channels values.
  void Apply(const FrameHistory<Real>& hist, std::span<Real> scratch, std::span<Real> out) const {
    conv_.Apply(hist, 1, scratch);
    ApplyGate<Real>(scratch, out, channels());
    norm_.Apply(out);
  }

 private:
  CausalConv2d<Real> conv_;
  NormAct<Real> norm_;
};

}  // namespace tscn::nn
