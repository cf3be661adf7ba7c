// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "stefan_kan/error.hpp"
#include "stefan_kan/jet.hpp"

namespace stefan_kan::specfun {

// The C library's erf/erfc are correctly rounded to within an ulp or two on
// every platform we build on, far inside the 1e-12 the oracles need.
inline double erf(double x) { return std::erf(x); }
inline double erfc(double x) { return std::erfc(x); }

/// Exponential integral E1(z) = ∫_z^∞ e^{-t}/t dt for z > 0.
/// Power series for z ≤ 1, Lentz continued fraction above.
inline double exp_integral_e1(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("E1 requires a finite z > 0, got " + std::to_string(z));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (z <= 1.0) {
    // E1(z) = -γ - ln z - Σ_{k≥1} (-z)^k / (k·k!)
    double sum = 0.0;
    double term = 1.0;  // (-z)^k / k!
    for (int k = 1; k < 200; ++k) {
      term *= -z / k;
      const double contrib = term / k;
      sum += contrib;
      if (std::abs(contrib) < eps * std::abs(sum)) break;
    }
    return -std::numbers::egamma - std::log(z) - sum;
  }
  constexpr double tiny = 1e-300;
  double b = z + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h * std::exp(-z);
}

/// E1 on a jet argument: E1' = -e^{-z}/z, E1'' = e^{-z}(z+1)/z².
inline Jet2<double> exp_integral_e1(const Jet2<double>& z) {
  const double e = std::exp(-z.v);
  return detail::chain(z, exp_integral_e1(z.v), -e / z.v, e * (z.v + 1.0) / (z.v * z.v));
}

}  // namespace stefan_kan::specfun
