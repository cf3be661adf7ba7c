// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Second-order directional jets: (value, d/ds, d²/ds²) along one input
// direction s, propagated with truncated Taylor arithmetic. The scalar type
// is a template parameter so the same expressions run on plain doubles and on
// taped reverse-mode variables.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <type_traits>

#include "stefan_kan/error.hpp"

namespace stefan_kan {

template <class T>
struct Jet2 {
  T v{};
  T d1{};
  T d2{};

  Jet2() = default;
  Jet2(T value) : v(value), d1(T(0.0)), d2(T(0.0)) {}  // NOLINT: implicit constant
  Jet2(T value, T first, T second) : v(value), d1(first), d2(second) {}

  /// Independent variable seeded along the evaluation direction.
  static Jet2 variable(T value) { return {value, T(1.0), T(0.0)}; }
};

namespace detail {
inline double value_of(double x) { return x; }
template <class T>
auto value_of(const T& x) -> decltype(x.value) {
  return x.value;
}

/// c = f(a) with f, f', f'' already evaluated at a.v.
template <class T>
Jet2<T> chain(const Jet2<T>& a, T f0, T f1, T f2) {
  return {f0, f1 * a.d1, f2 * a.d1 * a.d1 + f1 * a.d2};
}
}  // namespace detail

template <class T>
Jet2<T> operator+(const Jet2<T>& a, const Jet2<T>& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
template <class T>
Jet2<T> operator-(const Jet2<T>& a, const Jet2<T>& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
template <class T>
Jet2<T> operator-(const Jet2<T>& a) {
  return {-a.v, -a.d1, -a.d2};
}
template <class T>
Jet2<T> operator*(const Jet2<T>& a, const Jet2<T>& b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1,
          a.d2 * b.v + 2.0 * (a.d1 * b.d1) + a.v * b.d2};
}
template <class T>
Jet2<T> operator*(const Jet2<T>& a, double c) {
  return {a.v * c, a.d1 * c, a.d2 * c};
}
template <class T>
Jet2<T> operator*(double c, const Jet2<T>& a) {
  return a * c;
}
template <class T>
Jet2<T> operator+(const Jet2<T>& a, double c) {
  return {a.v + c, a.d1, a.d2};
}
template <class T>
Jet2<T> operator+(double c, const Jet2<T>& a) {
  return a + c;
}
template <class T>
Jet2<T> operator-(const Jet2<T>& a, double c) {
  return {a.v - c, a.d1, a.d2};
}
template <class T>
Jet2<T> operator-(double c, const Jet2<T>& a) {
  return {c - a.v, -a.d1, -a.d2};
}

template <class T>
Jet2<T> reciprocal(const Jet2<T>& a) {
  if (detail::value_of(a.v) == 0.0) throw UnsupportedOperation("reciprocal of a zero jet");
  T r = 1.0 / a.v;
  return detail::chain(a, r, -(r * r), 2.0 * (r * r * r));
}
template <class T>
Jet2<T> operator/(const Jet2<T>& a, const Jet2<T>& b) {
  return a * reciprocal(b);
}
template <class T>
Jet2<T> operator/(const Jet2<T>& a, double c) {
  return a * (1.0 / c);
}

template <class T>
Jet2<T> exp(const Jet2<T>& a) {
  using std::exp;
  T e = exp(a.v);
  return detail::chain(a, e, e, e);
}
template <class T>
Jet2<T> log(const Jet2<T>& a) {
  using std::log;
  if (!(detail::value_of(a.v) > 0.0)) throw UnsupportedOperation("log jet at non-positive value");
  T r = 1.0 / a.v;
  return detail::chain(a, log(a.v), r, -(r * r));
}
template <class T>
Jet2<T> sqrt(const Jet2<T>& a) {
  using std::sqrt;
  if (!(detail::value_of(a.v) > 0.0)) throw UnsupportedOperation("sqrt jet at non-positive value");
  T s = sqrt(a.v);
  T d = 0.5 / s;
  return detail::chain(a, s, d, -(d / (2.0 * a.v)));
}
template <class T>
Jet2<T> square(const Jet2<T>& a) {
  return a * a;
}
template <class T>
Jet2<T> sin(const Jet2<T>& a) {
  using std::cos;
  using std::sin;
  T s = sin(a.v);
  return detail::chain(a, s, cos(a.v), -s);
}
template <class T>
Jet2<T> cos(const Jet2<T>& a) {
  using std::cos;
  using std::sin;
  T c = cos(a.v);
  return detail::chain(a, c, -sin(a.v), -c);
}
template <class T>
Jet2<T> erf(const Jet2<T>& a) {
  using std::erf;
  using std::exp;
  T g = (2.0 / std::sqrt(std::numbers::pi)) * exp(-(a.v * a.v));
  return detail::chain(a, erf(a.v), g, -2.0 * (a.v * g));
}
template <class T>
Jet2<T> erfc(const Jet2<T>& a) {
  using std::erfc;
  using std::exp;
  T g = (2.0 / std::sqrt(std::numbers::pi)) * exp(-(a.v * a.v));
  return detail::chain(a, erfc(a.v), -g, 2.0 * (a.v * g));
}

/// Logistic sigmoid on plain doubles, stable for large |z|.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// silu(z) = z·sigmoid(z) and its first three derivatives.
struct SiluDerivs {
  double f0, f1, f2, f3;
};
inline SiluDerivs silu_derivs(double z) {
  const double s = sigmoid(z);
  const double s1 = s * (1.0 - s);
  const double s2 = s1 * (1.0 - 2.0 * s);
  const double s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
  return {z * s, s + z * s1, 2.0 * s1 + z * s2, 3.0 * s2 + z * s3};
}

template <class T>
Jet2<T> sigmoid(const Jet2<T>& a) {
  const double s = sigmoid(detail::value_of(a.v));
  if constexpr (std::is_same_v<T, double>) {
    const double s1 = s * (1.0 - s);
    return detail::chain(a, s, s1, s1 * (1.0 - 2.0 * s));
  } else {
    T st = sigmoid(a.v);
    T s1 = st * (1.0 - st);
    return detail::chain(a, st, s1, s1 * (1.0 - 2.0 * st));
  }
}

// ---------------------------------------------------------------------------
// Multi-direction jets for fields over (x[, y], t).

/// Value, per-coordinate first derivatives, and per-coordinate (diagonal)
/// second derivatives of a scalar field in N input coordinates.
template <class S, std::size_t N>
struct PointJet {
  S v{};
  std::array<S, N> d1{};
  std::array<S, N> d2{};
};

/// Which coordinate directions to differentiate along and to what order.
struct JetRequest {
  std::uint8_t dirs = 0;  // bit i set: differentiate along coordinate i
  int order = 0;          // 0 value only, 1 first, 2 first + diagonal second

  bool has(std::size_t i) const { return ((dirs >> i) & 1u) != 0; }

  static JetRequest value() { return {0, 0}; }
  static JetRequest first(std::uint8_t dirs) { return {dirs, 1}; }
  static JetRequest second(std::uint8_t dirs) { return {dirs, 2}; }
  template <std::size_t N>
  static JetRequest all(int order) {
    return {static_cast<std::uint8_t>((1u << N) - 1u), order};
  }
};

/// Seeds a Jet2 evaluation of `f` along each requested coordinate of `x` and
/// gathers the results. `f` maps std::array<Jet2<double>, N> to Jet2<double>.
template <std::size_t N, class F>
PointJet<double, N> jets_by_direction(F&& f, const std::array<double, N>& x, JetRequest req) {
  PointJet<double, N> out;
  bool have_value = false;
  for (std::size_t i = 0; i < N; ++i) {
    if (req.order == 0 || !req.has(i)) continue;
    std::array<Jet2<double>, N> in;
    for (std::size_t j = 0; j < N; ++j) in[j] = Jet2<double>(x[j]);
    in[i].d1 = 1.0;
    const Jet2<double> r = f(in);
    out.v = r.v;
    out.d1[i] = r.d1;
    if (req.order >= 2) out.d2[i] = r.d2;
    have_value = true;
  }
  if (!have_value) {
    std::array<Jet2<double>, N> in;
    for (std::size_t j = 0; j < N; ++j) in[j] = Jet2<double>(x[j]);
    out.v = f(in).v;
  }
  return out;
}

}  // namespace stefan_kan
