// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stefan_kan/error.hpp"
#include "stefan_kan/jet.hpp"

namespace stefan_kan {

inline constexpr int kMaxSplineDegree = 5;
inline constexpr int kMaxBasisDerivative = 3;

/// Uniform knot vector over [lo, hi] with `intervals` cells, extended by
/// `degree` knots on either side so that every point of [lo, hi] is covered
/// by degree+1 non-zero basis functions.
struct SplineGrid {
  double lo = -1.0;
  double hi = 1.0;
  int intervals = 5;
  int degree = 3;
  std::vector<double> knots;

  int num_basis() const { return intervals + degree; }
  double spacing() const { return (hi - lo) / intervals; }

  bool operator==(const SplineGrid& o) const {
    return lo == o.lo && hi == o.hi && intervals == o.intervals && degree == o.degree;
  }
};

inline SplineGrid make_grid(double lo, double hi, int intervals, int degree) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw DomainError("spline grid needs finite lo < hi");
  if (intervals < 1) throw DomainError("spline grid needs at least one interval");
  if (degree < 0 || degree > kMaxSplineDegree)
    throw DomainError("spline degree must lie in [0, " + std::to_string(kMaxSplineDegree) + "]");
  SplineGrid g{lo, hi, intervals, degree, {}};
  const int n = intervals + 2 * degree + 1;
  g.knots.resize(static_cast<std::size_t>(n));
  const double h = (hi - lo) / intervals;
  for (int i = 0; i < n; ++i) g.knots[i] = lo + (i - degree) * h;
  g.knots[degree] = lo;
  g.knots[degree + intervals] = hi;
  return g;
}

/// The degree+1 basis functions that are non-zero at one point, together
/// with their derivatives up to `order`. Entry ders[r][j] is the r-th
/// derivative of basis function (first + j).
struct LocalBasis {
  int first = 0;
  int count = 0;
  bool clamped = false;  // input was outside [lo, hi]; derivatives are zero
  std::array<std::array<double, kMaxSplineDegree + 1>, kMaxBasisDerivative + 1> ders{};
};

/// Index s of the knot span [knots[s], knots[s+1]) containing x ∈ [lo, hi].
/// x == hi maps to the last span so the basis stays a partition of unity.
inline int find_span(const SplineGrid& g, double x) {
  const int k = g.degree;
  if (x >= g.hi) return k + g.intervals - 1;
  int s = k + static_cast<int>(std::floor((x - g.lo) / g.spacing()));
  s = std::clamp(s, k, k + g.intervals - 1);
  // floor() can land one cell off near knot values.
  while (s > k && x < g.knots[s]) --s;
  while (s < k + g.intervals - 1 && x >= g.knots[s + 1]) ++s;
  return s;
}

/// Non-zero basis functions and derivatives at x (Cox–de Boor triangle with
/// the derivative recurrence of Piegl & Tiller, algorithm A2.3). Inputs
/// outside [lo, hi] are clamped and report zero derivatives. Cubic grids
/// take a closed-form shortcut unless `closed_form_cubic` is false.
inline LocalBasis local_basis(const SplineGrid& g, double x, int order, bool closed_form_cubic = true) {
  if (!std::isfinite(x)) throw EvaluationError("spline basis evaluated at a non-finite input", x);
  LocalBasis out;
  if (x < g.lo || x > g.hi) {
    out.clamped = true;
    x = std::clamp(x, g.lo, g.hi);
  }
  const int p = g.degree;
  const int n = std::min(order, kMaxBasisDerivative);
  const int s = find_span(g, x);
  const auto& U = g.knots;
  out.first = s - p;
  out.count = p + 1;

  if (p == 3 && closed_form_cubic) {
    // Uniform cubic: closed-form segment polynomials in t ∈ [0, 1].
    const double h = g.spacing();
    const double t = (x - U[s]) / h;
    const double u = 1.0 - t;
    const double t2 = t * t, t3 = t2 * t;
    out.ders[0] = {u * u * u / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
                   t3 / 6.0};
    if (n == 0 || out.clamped) return out;
    const double ih = 1.0 / h;
    out.ders[1] = {-0.5 * u * u * ih, (1.5 * t2 - 2.0 * t) * ih, (-1.5 * t2 + t + 0.5) * ih, 0.5 * t2 * ih};
    if (n == 1) return out;
    const double ih2 = ih * ih;
    out.ders[2] = {u * ih2, (3.0 * t - 2.0) * ih2, (1.0 - 3.0 * t) * ih2, t * ih2};
    if (n == 2) return out;
    const double ih3 = ih2 * ih;
    out.ders[3] = {-ih3, 3.0 * ih3, -3.0 * ih3, ih3};
    return out;
  }

  std::array<std::array<double, kMaxSplineDegree + 1>, kMaxSplineDegree + 1> ndu{};
  std::array<double, kMaxSplineDegree + 1> left{}, right{};
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - U[s + 1 - j];
    right[j] = U[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j <= p; ++j) out.ders[0][j] = ndu[j][p];
  if (n == 0 || out.clamped) return out;

  const int nd = std::min(n, p);
  std::array<std::array<double, kMaxSplineDegree + 1>, 2> a{};
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      out.ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) out.ders[k][j] *= factor;
    factor *= (p - k);
  }
  return out;
}

/// All G+k basis values B_m(x).
inline std::vector<double> basis_values(const SplineGrid& g, double x) {
  const LocalBasis lb = local_basis(g, x, 0);
  std::vector<double> out(static_cast<std::size_t>(g.num_basis()), 0.0);
  for (int j = 0; j < lb.count; ++j) out[lb.first + j] = lb.ders[0][j];
  return out;
}

/// Basis functions composed with a jet argument: (B(x), B'(x)·x', B''(x)·x'² + B'(x)·x'').
inline std::vector<Jet2<double>> basis_jets(const SplineGrid& g, const Jet2<double>& x) {
  const LocalBasis lb = local_basis(g, x.v, 2);
  std::vector<Jet2<double>> out(static_cast<std::size_t>(g.num_basis()), Jet2<double>(0.0));
  for (int j = 0; j < lb.count; ++j) {
    const double b0 = lb.ders[0][j], b1 = lb.ders[1][j], b2 = lb.ders[2][j];
    out[lb.first + j] = {b0, b1 * x.d1, b2 * x.d1 * x.d1 + b1 * x.d2};
  }
  return out;
}

}  // namespace stefan_kan
