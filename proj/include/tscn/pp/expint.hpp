// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tscn/core/error.hpp"

namespace tscn::pp {

// Exponential integral E1(v) = int_v^inf exp(-t)/t dt for v > 0.
//
// v <= 1: E1(v) = -gamma - ln v - sum_{k>=1} (-v)^k / (k k!)
// v >  1: continued fraction
//           E1(v) = exp(-v) / (v + 1 - 1/(v + 3 - 4/(v + 5 - ...)))
//         evaluated with the modified Lentz method.
inline double ExpintE1(double v) {
  Require(v > 0 && !std::isnan(v), ErrorKind::kInvalidArgument,
          "E1 needs a positive argument, got " + std::to_string(v));
  if (std::isinf(v)) return 0.0;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxIter = 500;
  if (v <= 1.0) {
    double term = 1.0;  // (-v)^k / k!
    double sum = 0.0;
    for (int k = 1; k < kMaxIter; ++k) {
      term *= -v / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) <= std::abs(sum) * kEps) break;
    }
    return -std::numbers::egamma - std::log(v) - sum;
  }
  constexpr double kTiny = 1e-300;
  double b = v + 1.0;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) <= kEps) break;
  }
  return h * std::exp(-v);
}

}  // namespace tscn::pp
