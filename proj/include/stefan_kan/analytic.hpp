// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Closed-form reference solutions.
//
// 1D two-phase Neumann solution (solid on the left, held at T_1 at x = 0;
// liquid on the right, far-field T_2). With tau = t + t0:
//
//   s(t)   = 2 λ sqrt(α_s tau)
//   u_s    = T_1 + (T_m - T_1) erf(x / 2sqrt(α_s tau)) / erf(λ)
//   u_l    = T_2 - (T_2 - T_m) erfc(x / 2sqrt(α_l tau)) / erfc(λ ν),  ν = sqrt(α_s/α_l)
//
// and λ is the root of the interface heat balance ρ_s L s' = k_s u_s,x - k_l u_l,x:
//
//   k_s (T_m - T_1) e^{-λ²} / (erf(λ) sqrt(π α_s))
//     - k_l (T_2 - T_m) e^{-ν²λ²} / (erfc(νλ) sqrt(π α_l)) - ρ_s L λ sqrt(α_s) = 0.
//
// The shift t0 places the interface at s0 at t_start.
//
// 2D Frank solution: a solid disc of radius R(t) = R0 sqrt(t) at T_m grows
// into liquid with u = T_m + (T_inf - T_m) (1 - E1(r²/4α_l t) / E1(R0²/4α_l)).

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "stefan_kan/error.hpp"
#include "stefan_kan/jet.hpp"
#include "stefan_kan/specfun.hpp"

namespace stefan_kan {

enum class Problem { stefan1d, stefan2d };

inline const char* problem_name(Problem p) { return p == Problem::stefan1d ? "stefan1d" : "stefan2d"; }

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Interval&) const = default;
};

/// Default interface band width as a fraction of the domain diagonal. The
/// exact solution itself pays interface loss ~ε_Γ³ inside a wide band, so the
/// band is kept to about one tenth of a length unit on the 2D benchmark.
inline constexpr double kEpsGammaPerDiagonal = 0.007;

struct PhysicsConfig {
  Problem problem = Problem::stefan1d;
  double alpha_s = 1.0;
  double alpha_l = 1.0;
  double k_s = 1.0;
  double k_l = 1.0;
  double rho_s = 1.0;
  double latent = 1.0;
  double T_m = 0.0;
  double T_1 = -1.0;
  double T_2 = 0.5;
  double T_inf = std::numeric_limits<double>::quiet_NaN();  // NaN: derive from the Stefan balance
  double s0 = 0.2;
  double R0 = 1.56;
  std::vector<Interval> domain{{0.0, 1.0}};
  double t_start = 0.0;
  double t_end = 0.25;
  double beta = 100.0;
  double eps_gamma = std::numeric_limits<double>::quiet_NaN();  // NaN: kEpsGammaPerDiagonal × diagonal
  bool step_ic = false;
  bool origin_pin = true;

  int dim() const { return static_cast<int>(domain.size()); }
  double diagonal() const {
    double d2 = 0.0;
    for (const auto& iv : domain) d2 += (iv.hi - iv.lo) * (iv.hi - iv.lo);
    return std::sqrt(d2);
  }
};

/// Desk-scale 1D problem: unit properties, T_1 = -1, T_2 = 0.5, s0 = 0.2 on
/// [0, 1] × [0, 0.25].
inline PhysicsConfig default_1d() { return PhysicsConfig{}; }

/// Desk-scale 2D problem: [-5, 5]², R0 = 1.56, t ∈ [1, 3].
inline PhysicsConfig default_2d() {
  PhysicsConfig c;
  c.problem = Problem::stefan2d;
  c.domain = {{-5.0, 5.0}, {-5.0, 5.0}};
  c.t_start = 1.0;
  c.t_end = 3.0;
  return c;
}

// ---------------------------------------------------------------------------
// Root finding.

/// Bisection on [lo, hi] for a sign change of f; stops after `iters` halvings
/// or when the bracket collapses to adjacent doubles.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0) || !std::isfinite(flo) || !std::isfinite(fhi))
    throw RootBracketError("no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// 1D Neumann solution.

/// Interface balance whose positive root is λ.
inline double neumann_residual(const PhysicsConfig& c, double lambda) {
  const double nu = std::sqrt(c.alpha_s / c.alpha_l);
  const double solid =
      c.k_s * (c.T_m - c.T_1) * std::exp(-lambda * lambda) / (specfun::erf(lambda) * std::sqrt(std::numbers::pi * c.alpha_s));
  double liquid = 0.0;
  if (c.T_2 != c.T_m)
    liquid = c.k_l * (c.T_2 - c.T_m) * std::exp(-nu * nu * lambda * lambda) /
             (specfun::erfc(nu * lambda) * std::sqrt(std::numbers::pi * c.alpha_l));
  return solid - liquid - c.rho_s * c.latent * lambda * std::sqrt(c.alpha_s);
}

inline double neumann_lambda(const PhysicsConfig& c) {
  if (!(c.alpha_s > 0 && c.alpha_l > 0 && c.k_s > 0 && c.k_l > 0 && c.rho_s > 0 && c.latent > 0))
    throw RootBracketError("Neumann root needs positive material properties");
  const auto f = [&](double l) { return neumann_residual(c, l); };
  const double lo = 1e-12;
  double hi = 1.0;
  while (f(hi) > 0.0 && hi < 16.0) hi *= 2.0;
  return bisect(f, lo, hi);
}

/// The 1D solution with λ and the time shift resolved once.
class Neumann1D {
 public:
  explicit Neumann1D(const PhysicsConfig& c) : c_(c), lambda_(neumann_lambda(c)) {
    t0_ = c.s0 * c.s0 / (4.0 * lambda_ * lambda_ * c.alpha_s) - c.t_start;
    nu_ = std::sqrt(c.alpha_s / c.alpha_l);
  }

  double lambda() const { return lambda_; }
  double time_shift() const { return t0_; }

  template <class T>
  T interface(const T& t) const {
    using std::sqrt;
    return 2.0 * lambda_ * sqrt(c_.alpha_s * (t + t0_));
  }

  /// Solid-phase profile, continued analytically past the interface.
  template <class T>
  T solid(const T& x, const T& t) const {
    using std::erf;
    using std::sqrt;
    return c_.T_1 + (c_.T_m - c_.T_1) / specfun::erf(lambda_) * erf(x / (2.0 * sqrt(c_.alpha_s * (t + t0_))));
  }

  template <class T>
  T liquid(const T& x, const T& t) const {
    using std::erfc;
    using std::sqrt;
    return c_.T_2 - (c_.T_2 - c_.T_m) / specfun::erfc(nu_ * lambda_) * erfc(x / (2.0 * sqrt(c_.alpha_l * (t + t0_))));
  }

  double temperature(double x, double t) const { return x < interface(t) ? solid(x, t) : liquid(x, t); }

  /// Initial temperature: the shifted profile, or the raw T_1/T_2 step.
  double initial_temperature(double x) const {
    if (c_.step_ic) return x < c_.s0 ? c_.T_1 : c_.T_2;
    return temperature(x, c_.t_start);
  }

 private:
  PhysicsConfig c_;
  double lambda_;
  double t0_ = 0.0;
  double nu_ = 1.0;
};

inline double exact_1d(const PhysicsConfig& c, double x, double t) { return Neumann1D(c).temperature(x, t); }
inline double exact_interface_1d(const PhysicsConfig& c, double t) { return Neumann1D(c).interface(t); }

// ---------------------------------------------------------------------------
// 2D Frank solution.

namespace detail {
/// ∂u/∂r at the interface for a given far-field temperature.
inline double frank_interface_flux(const PhysicsConfig& c, double T_inf, double t) {
  const double z0 = c.R0 * c.R0 / (4.0 * c.alpha_l);
  const double R = c.R0 * std::sqrt(t);
  // u = T_m + (T_inf - T_m)(1 - E1(z)/E1(z0)), z = r²/(4 α_l t); dE1/dr = -2 e^{-z}/r
  const double z = R * R / (4.0 * c.alpha_l * t);
  return (T_inf - c.T_m) * 2.0 * std::exp(-z) / (R * specfun::exp_integral_e1(z0));
}
}  // namespace detail

/// Far-field temperature for which the similarity field satisfies the
/// Stefan condition ρ_s L dR/dt = -k_l ∂u/∂r at r = R(t)⁺.
inline double frank_t_inf(const PhysicsConfig& c) {
  if (!(c.R0 > 0 && c.rho_s > 0 && c.latent > 0 && c.k_l > 0 && c.alpha_l > 0))
    throw DomainError("Frank solution needs positive R0 and material properties");
  const double t = 1.0;
  const double speed = c.R0 / (2.0 * std::sqrt(t));
  const auto balance = [&](double T) { return c.rho_s * c.latent * speed + c.k_l * detail::frank_interface_flux(c, T, t); };
  double lo = c.T_m - 1.0;
  while (balance(lo) > 0.0 && c.T_m - lo < 1e12) lo = c.T_m - 2.0 * (c.T_m - lo);
  return bisect(balance, lo, c.T_m);
}

class Frank2D {
 public:
  explicit Frank2D(const PhysicsConfig& c) : c_(c) {
    T_inf_ = std::isnan(c.T_inf) ? frank_t_inf(c) : c.T_inf;
    e1_r0_ = specfun::exp_integral_e1(c.R0 * c.R0 / (4.0 * c.alpha_l));
  }

  double t_inf() const { return T_inf_; }

  double radius(double t) const {
    if (!(t > 0.0)) throw DomainError("Frank solution needs t > 0");
    return c_.R0 * std::sqrt(t);
  }

  /// Liquid branch as a function of (r², t), defined for r > 0 on both sides
  /// of the interface.
  template <class T>
  T liquid_r2(const T& r2, const T& t) const {
    const T e1 = specfun::exp_integral_e1(r2 / (4.0 * c_.alpha_l * t));
    return c_.T_m + (T_inf_ - c_.T_m) * (1.0 - e1 * (1.0 / e1_r0_));
  }

  double field(double r, double t) const {
    if (!(t > 0.0)) throw DomainError("Frank solution needs t > 0");
    if (r <= radius(t)) return c_.T_m;
    return liquid_r2(r * r, t);
  }

 private:
  PhysicsConfig c_;
  double T_inf_;
  double e1_r0_;
};

inline double frank_radius(const PhysicsConfig& c, double t) { return Frank2D(c).radius(t); }
inline double frank_field(const PhysicsConfig& c, double r, double t) { return Frank2D(c).field(r, t); }

/// ‖x‖ − R(t).
inline double sdf_circle(const PhysicsConfig& c, std::array<double, 2> x, double t) {
  return std::hypot(x[0], x[1]) - frank_radius(c, t);
}

// ---------------------------------------------------------------------------
// Oracle fields: analytic solutions exposed through the same jet interface
// as the networks (see physics.hpp), for verification.

struct NeumannSolidField {
  Neumann1D sol;
  PointJet<double, 2> jet(const std::array<double, 2>& x, JetRequest req) const {
    return jets_by_direction<2>([&](const std::array<Jet2<double>, 2>& p) { return sol.solid(p[0], p[1]); }, x, req);
  }
};

struct NeumannLiquidField {
  Neumann1D sol;
  PointJet<double, 2> jet(const std::array<double, 2>& x, JetRequest req) const {
    return jets_by_direction<2>([&](const std::array<Jet2<double>, 2>& p) { return sol.liquid(p[0], p[1]); }, x, req);
  }
};

/// s(t) of the 1D solution as a one-input field.
struct NeumannInterfaceField {
  Neumann1D sol;
  PointJet<double, 1> jet(const std::array<double, 1>& t, JetRequest req) const {
    return jets_by_direction<1>([&](const std::array<Jet2<double>, 1>& p) { return sol.interface(p[0]); }, t, req);
  }
};

struct ConstantField3 {
  double value = 0.0;
  PointJet<double, 3> jet(const std::array<double, 3>&, JetRequest) const {
    PointJet<double, 3> r;
    r.v = value;
    return r;
  }
};

/// Liquid branch extended through the whole plane. The branch diverges
/// logarithmically at the origin, so r = 0 is evaluated at the smallest
/// positive r² with zero derivatives (the field is radially symmetric there).
struct FrankLiquidField {
  Frank2D sol;
  PointJet<double, 3> jet(const std::array<double, 3>& x, JetRequest req) const {
    if (x[0] == 0.0 && x[1] == 0.0) {
      PointJet<double, 3> r;
      r.v = sol.liquid_r2(std::numeric_limits<double>::min(), x[2]);
      return r;
    }
    return jets_by_direction<3>(
        [&](const std::array<Jet2<double>, 3>& p) { return sol.liquid_r2(p[0] * p[0] + p[1] * p[1], p[2]); }, x, req);
  }
};

struct CircleSdfField {
  PhysicsConfig cfg;
  PointJet<double, 3> jet(const std::array<double, 3>& x, JetRequest req) const {
    const double R0 = cfg.R0;
    if (x[0] == 0.0 && x[1] == 0.0) {
      // The cone tip has no gradient; report the value and the time slope.
      PointJet<double, 3> r;
      r.v = -R0 * std::sqrt(x[2]);
      if (req.order >= 1 && req.has(2)) r.d1[2] = -0.5 * R0 / std::sqrt(x[2]);
      if (req.order >= 2 && req.has(2)) r.d2[2] = 0.25 * R0 / (x[2] * std::sqrt(x[2]));
      return r;
    }
    return jets_by_direction<3>(
        [&](const std::array<Jet2<double>, 3>& p) {
          return sqrt(p[0] * p[0] + p[1] * p[1]) - R0 * sqrt(p[2]);
        },
        x, req);
  }
};

}  // namespace stefan_kan
