// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Physics-informed residuals and loss terms.
//
// A "field" is anything with
//   PointJet<S, N> jet(const std::array<S, N>& x, JetRequest req) const
// over coordinates (x[, y], t): a network wrapper, a taped network wrapper,
// or an analytic oracle. Per-point kernels are templated on the scalar S so
// that the same expressions produce loss values (S = double) and tape
// records for parameter gradients (S = Var).
//
// Sign convention: φ < 0 in the solid, φ > 0 in the liquid, normal
// n = ∇φ/|∇φ| points into the liquid. In 1D the level set is φ = x − s(t).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stefan_kan/analytic.hpp"
#include "stefan_kan/error.hpp"
#include "stefan_kan/jet.hpp"
#include "stefan_kan/kan.hpp"
#include "stefan_kan/tape.hpp"

namespace stefan_kan {

// ---------------------------------------------------------------------------
// Network fields.

template <std::size_t N>
struct NetField {
  const KanNetwork* net = nullptr;
  PointJet<double, N> jet(const std::array<double, N>& x, JetRequest req) const { return forward_jets<N>(*net, x, req); }
};

template <std::size_t N>
struct TapedNetField {
  Tape* tape = nullptr;
  const KanNetwork* net = nullptr;
  std::size_t offset = 0;
  PointJet<Var, N> jet(const std::array<Var, N>& x, JetRequest req) const {
    return forward_jets<N>(*tape, *net, offset, x, req);
  }
};

/// φ(x, t) = x − s(t) from a one-input interface field s.
template <class SField>
struct InterfacePhi1D {
  SField s;

  template <class S>
  auto jet(const std::array<S, 2>& x, JetRequest req) const {
    const JetRequest sreq{static_cast<std::uint8_t>(req.has(1) ? 1u : 0u), req.has(1) ? req.order : 0};
    const auto sj = s.jet(std::array<S, 1>{x[1]}, sreq);
    PointJet<S, 2> r;
    r.v = x[0] - sj.v;
    if (req.order >= 1) {
      if (req.has(0)) r.d1[0] = S(1.0);
      if (req.has(1)) r.d1[1] = -sj.d1[0];
    }
    if (req.order >= 2 && req.has(1)) r.d2[1] = -sj.d2[0];
    return r;
  }
};

/// Temperature fields of both phases plus the level-set provider.
template <class US, class UL, class PF>
struct FieldSet {
  US u_s;
  UL u_l;
  PF phi;
};

template <class US, class UL, class PF>
FieldSet<US, UL, PF> make_fields(US u_s, UL u_l, PF phi) {
  return {std::move(u_s), std::move(u_l), std::move(phi)};
}

// ---------------------------------------------------------------------------
// Loss bookkeeping.

struct LossWeights {
  double pde_s = 1.0;
  double pde_l = 1.0;
  double interface = 1.0;
  double advection = 1.0;
  double eikonal = 1.0;
  double bc = 10.0;
  double ic = 10.0;
  double stefan_1d = 1.0;
  double continuity_1d = 1.0;
  double origin_pin = 10.0;
};

struct LossBreakdown {
  double pde_s = 0.0;
  double pde_l = 0.0;
  double interface = 0.0;
  double advection = 0.0;
  double eikonal = 0.0;
  double bc = 0.0;
  double ic = 0.0;
  double stefan_1d = 0.0;
  double continuity_1d = 0.0;
  double origin_pin = 0.0;
  double total = 0.0;
  LossWeights weights;

  double weighted_sum() const {
    const LossWeights& w = weights;
    return w.pde_s * pde_s + w.pde_l * pde_l + w.interface * interface + w.advection * advection +
           w.eikonal * eikonal + w.bc * bc + w.ic * ic + w.stefan_1d * stefan_1d + w.continuity_1d * continuity_1d +
           w.origin_pin * origin_pin;
  }
};

/// Counters for points the advection term had to skip or adjust.
struct PhysicsDiagnostics {
  std::size_t degenerate_gradient = 0;
  std::size_t projection_clamped = 0;
};

/// Space-time point: (x, t) in 1D, (x, y, t) in 2D, padded to three slots.
using SpaceTime = std::array<double, 3>;

template <std::size_t N, class S = double>
std::array<S, N> coords(const SpaceTime& p) {
  std::array<S, N> a;
  for (std::size_t i = 0; i < N; ++i) a[i] = S(p[i]);
  return a;
}

// ---------------------------------------------------------------------------
// Pointwise building blocks.

template <class S>
struct Masks {
  S solid;
  S liquid;
};

/// H_l = sigmoid(β φ), H_s = 1 − H_l.
template <class S>
Masks<S> heaviside_masks(const S& phi, double beta) {
  using stefan_kan::sigmoid;
  const S hl = sigmoid(beta * phi);
  return {1.0 - hl, hl};
}

/// exp(−φ² / ε²).
template <class S>
S interface_weight(const S& phi, double eps_gamma) {
  using std::exp;
  return exp(-(phi * phi) * (1.0 / (eps_gamma * eps_gamma)));
}

/// u_t − α Σ_i u_{x_i x_i}, from a jet with first/second derivatives.
template <class S, std::size_t N>
S heat_residual(const PointJet<S, N>& u, double alpha) {
  S lap = u.d2[0];
  for (std::size_t i = 1; i + 1 < N; ++i) lap = lap + u.d2[i];
  return u.d1[N - 1] - alpha * lap;
}

template <std::size_t N>
constexpr std::uint8_t all_dirs() {
  return static_cast<std::uint8_t>((1u << N) - 1u);
}
template <std::size_t N>
constexpr std::uint8_t space_dirs() {
  return static_cast<std::uint8_t>((1u << (N - 1)) - 1u);
}

/// u_t − α ∇²u of a field at one point.
template <std::size_t N, class Field>
double pde_residual(const Field& u, const std::array<double, N>& x, double alpha) {
  return heat_residual(u.jet(x, JetRequest::second(all_dirs<N>())), alpha);
}

/// Mask-composed temperature H_s(φ) u_s + H_l(φ) u_l.
template <std::size_t N, class S, class FS>
S composed_temperature(const FS& f, const std::array<S, N>& x, double beta) {
  const auto us = f.u_s.jet(x, JetRequest::value());
  const auto ul = f.u_l.jet(x, JetRequest::value());
  const auto ph = f.phi.jet(x, JetRequest::value());
  const Masks<S> h = heaviside_masks(ph.v, beta);
  return h.solid * us.v + h.liquid * ul.v;
}

template <class S>
struct DomainTerms {
  S pde_s{};
  S pde_l{};
  S interface{};
  S eikonal{};
  S advection{};
};

/// Masked PDE residuals (r·H)² for both phases at one point.
template <std::size_t N, class S, class FS>
std::pair<S, S> masked_pde_point(const FS& f, const std::array<S, N>& x, const PhysicsConfig& c) {
  const auto us = f.u_s.jet(x, JetRequest::second(all_dirs<N>()));
  const auto ul = f.u_l.jet(x, JetRequest::second(all_dirs<N>()));
  const auto ph = f.phi.jet(x, JetRequest::value());
  const Masks<S> h = heaviside_masks(ph.v, c.beta);
  const S rs = heat_residual(us, c.alpha_s) * h.solid;
  const S rl = heat_residual(ul, c.alpha_l) * h.liquid;
  return {rs * rs, rl * rl};
}

template <class S>
S norm2(const S& a, const S& b) {
  using std::sqrt;
  return sqrt(a * a + b * b);
}

/// k_s ∇u_s·n − k_l ∇u_l·n over ρ_s L, from spatial gradients.
template <class S, std::size_t N>
S stefan_speed(const PointJet<S, N>& us, const PointJet<S, N>& ul, const std::array<S, N - 1>& n,
               const PhysicsConfig& c) {
  S gs = us.d1[0] * n[0];
  S gl = ul.d1[0] * n[0];
  for (std::size_t i = 1; i + 1 < N; ++i) {
    gs = gs + us.d1[i] * n[i];
    gl = gl + ul.d1[i] * n[i];
  }
  return (c.k_s * gs - c.k_l * gl) * (1.0 / (c.rho_s * c.latent));
}

inline constexpr double kDegenerateGradient = 1e-8;

template <class S>
struct Extension {
  bool ok = false;  // false: degenerate gradient at x or x_Γ
  bool clamped = false;
  S speed{};
};

/// F(x, t) = V_n(x_Γ, t) with x_Γ = x − φ n and the normal re-evaluated at
/// x_Γ. `phi_grad` carries φ and ∇φ at x.
template <class S, class FS>
Extension<S> extend_velocity_2d(const FS& f, const std::array<S, 3>& x, const PointJet<S, 3>& phi_at_x,
                                const PhysicsConfig& c) {
  Extension<S> e;
  const S g = phi_at_x.d1[0] * phi_at_x.d1[0] + phi_at_x.d1[1] * phi_at_x.d1[1];
  if (!(std::sqrt(detail::value_of(g)) >= kDegenerateGradient)) return e;
  using std::sqrt;
  const S gn = sqrt(g);
  const S inv = 1.0 / gn;
  std::array<S, 3> xg{x[0] - phi_at_x.v * (phi_at_x.d1[0] * inv), x[1] - phi_at_x.v * (phi_at_x.d1[1] * inv), x[2]};
  for (int i = 0; i < 2; ++i) {
    const double v = detail::value_of(xg[i]);
    const Interval& iv = c.domain[static_cast<std::size_t>(i)];
    if (v < iv.lo || v > iv.hi) {
      xg[i] = S(std::clamp(v, iv.lo, iv.hi));
      e.clamped = true;
    }
  }
  const auto pg = f.phi.jet(xg, JetRequest::first(space_dirs<3>()));
  const S g2 = pg.d1[0] * pg.d1[0] + pg.d1[1] * pg.d1[1];
  if (!(std::sqrt(detail::value_of(g2)) >= kDegenerateGradient)) return e;
  const S inv2 = 1.0 / sqrt(g2);
  const std::array<S, 2> n{pg.d1[0] * inv2, pg.d1[1] * inv2};
  const auto us = f.u_s.jet(xg, JetRequest::first(space_dirs<3>()));
  const auto ul = f.u_l.jet(xg, JetRequest::first(space_dirs<3>()));
  e.speed = stefan_speed<S, 3>(us, ul, n, c);
  e.ok = true;
  return e;
}

/// All domain-collocation terms of the 2D formulation at one point.
template <class S, class FS>
DomainTerms<S> domain_terms_2d(const FS& f, const std::array<S, 3>& x, const PhysicsConfig& c,
                               PhysicsDiagnostics* diag) {
  DomainTerms<S> t;
  const auto us = f.u_s.jet(x, JetRequest::second(all_dirs<3>()));
  const auto ul = f.u_l.jet(x, JetRequest::second(all_dirs<3>()));
  const auto ph = f.phi.jet(x, JetRequest::first(all_dirs<3>()));
  const Masks<S> h = heaviside_masks(ph.v, c.beta);
  const S rs = heat_residual(us, c.alpha_s) * h.solid;
  const S rl = heat_residual(ul, c.alpha_l) * h.liquid;
  t.pde_s = rs * rs;
  t.pde_l = rl * rl;

  const S ds = us.v - c.T_m;
  const S dl = ul.v - c.T_m;
  t.interface = (ds * ds + dl * dl) * interface_weight(ph.v, c.eps_gamma);

  const S g2 = ph.d1[0] * ph.d1[0] + ph.d1[1] * ph.d1[1];
  const bool degenerate = !(std::sqrt(detail::value_of(g2)) >= kDegenerateGradient);
  if (degenerate) {
    // |∇φ| − 1 = −1 exactly; the sqrt derivative is undefined at 0.
    t.eikonal = S(1.0);
    if (diag != nullptr) ++diag->degenerate_gradient;
    t.advection = S(0.0);
    return t;
  }
  using std::sqrt;
  const S gn = sqrt(g2);
  const S e = gn - 1.0;
  t.eikonal = e * e;

  const Extension<S> ext = extend_velocity_2d(f, x, ph, c);
  if (diag != nullptr && ext.clamped) ++diag->projection_clamped;
  if (!ext.ok) {
    if (diag != nullptr) ++diag->degenerate_gradient;
    t.advection = S(0.0);
    return t;
  }
  const S r = ph.d1[2] + ext.speed * gn;
  t.advection = r * r;
  return t;
}

/// 1D domain terms: masked PDE residuals with φ = x − s(t).
template <class S, class FS>
DomainTerms<S> domain_terms_1d(const FS& f, const std::array<S, 2>& x, const PhysicsConfig& c) {
  DomainTerms<S> t;
  auto [ps, pl] = masked_pde_point<2, S>(f, x, c);
  t.pde_s = ps;
  t.pde_l = pl;
  return t;
}

template <class S>
struct InterfaceTerms1D {
  S stefan{};
  S continuity{};
};

/// Stefan balance and interface temperature continuity at x = s(t).
template <class S, class FS>
InterfaceTerms1D<S> interface_terms_1d(const FS& f, const S& t, const PhysicsConfig& c) {
  InterfaceTerms1D<S> r;
  const auto sj = f.phi.s.jet(std::array<S, 1>{t}, JetRequest::first(1));
  const std::array<S, 2> xs{sj.v, t};
  const auto us = f.u_s.jet(xs, JetRequest::first(1));
  const auto ul = f.u_l.jet(xs, JetRequest::first(1));
  const S bal = c.rho_s * c.latent * sj.d1[0] - c.k_s * us.d1[0] + c.k_l * ul.d1[0];
  r.stefan = bal * bal;
  const S ds = us.v - c.T_m;
  const S dl = ul.v - c.T_m;
  r.continuity = ds * ds + dl * dl;
  return r;
}

// ---------------------------------------------------------------------------
// Batches.

enum class BatchKind { domain, boundary, initial };

/// Collocation points with optional exact targets. Points are (x, t) or
/// (x, y, t) in the leading slots of SpaceTime.
struct SampleBatch {
  BatchKind kind = BatchKind::domain;
  int dim = 1;
  std::vector<SpaceTime> points;
  std::vector<double> temperature;  // boundary / initial targets
  std::vector<double> phi;          // initial level-set targets φ0
  std::vector<double> flux;         // optional Neumann data g_N (boundary); empty = unused
  std::vector<std::array<double, 2>> normals;  // outward normals, paired with flux
  std::uint64_t rng_seed = 0;

  std::size_t size() const { return points.size(); }
};

struct Batches {
  SampleBatch domain;
  SampleBatch boundary;
  SampleBatch initial;
};

namespace detail {
inline void require_points(const SampleBatch& b, const char* what) {
  if (b.points.empty()) throw EmptyBatch(std::string(what) + ": empty batch");
}
}  // namespace detail

template <std::size_t N, class S, class FS>
S bc_point(const FS& f, const SampleBatch& b, std::size_t i, const PhysicsConfig& c) {
  const auto x = coords<N, S>(b.points[i]);
  const S u = composed_temperature<N, S>(f, x, c.beta);
  const S d = u - b.temperature[i];
  S out = d * d;
  if (!b.flux.empty()) {
    // Composed field gradient along the outward normal.
    const auto us = f.u_s.jet(x, JetRequest::first(space_dirs<N>()));
    const auto ul = f.u_l.jet(x, JetRequest::first(space_dirs<N>()));
    const auto ph = f.phi.jet(x, JetRequest::first(space_dirs<N>()));
    const Masks<S> h = heaviside_masks(ph.v, c.beta);
    S dn = S(0.0);
    for (std::size_t k = 0; k + 1 < N; ++k) {
      const S dh = c.beta * h.liquid * h.solid * ph.d1[k];
      const S grad = h.solid * us.d1[k] + h.liquid * ul.d1[k] + dh * (ul.v - us.v);
      dn = dn + grad * b.normals[i][k];
    }
    const S e = dn - b.flux[i];
    out = out + e * e;
  }
  return out;
}

template <std::size_t N, class S, class FS>
S ic_point(const FS& f, const SampleBatch& b, std::size_t i, const PhysicsConfig& c) {
  const auto x = coords<N, S>(b.points[i]);
  const auto us = f.u_s.jet(x, JetRequest::value());
  const auto ul = f.u_l.jet(x, JetRequest::value());
  const auto ph = f.phi.jet(x, JetRequest::value());
  const Masks<S> h = heaviside_masks(ph.v, c.beta);
  const S du = h.solid * us.v + h.liquid * ul.v - b.temperature[i];
  const S dp = ph.v - b.phi[i];
  return du * du + dp * dp;
}

/// (u(0, t) − T_m)², the symmetry pin at the origin of the 2D problem.
template <class S, class FS>
S origin_pin_point(const FS& f, double t, const PhysicsConfig& c) {
  const std::array<S, 3> x{S(0.0), S(0.0), S(t)};
  const S d = composed_temperature<3, S>(f, x, c.beta) - c.T_m;
  return d * d;
}

// ---------------------------------------------------------------------------
// Batch-level loss terms (plain evaluation).

template <std::size_t N, class FS>
std::pair<double, double> masked_pde_losses(const FS& f, const SampleBatch& b, const PhysicsConfig& c) {
  detail::require_points(b, "masked_pde_losses");
  double ls = 0.0, ll = 0.0;
  for (const auto& p : b.points) {
    auto [ps, pl] = masked_pde_point<N, double>(f, coords<N>(p), c);
    ls += ps;
    ll += pl;
  }
  const double n = static_cast<double>(b.size());
  return {ls / n, ll / n};
}

template <class FS>
double loss_interface_nd(const FS& f, const SampleBatch& b, const PhysicsConfig& c) {
  detail::require_points(b, "loss_interface_nd");
  double acc = 0.0;
  for (const auto& p : b.points) {
    const auto x = coords<3>(p);
    const double us = f.u_s.jet(x, JetRequest::value()).v - c.T_m;
    const double ul = f.u_l.jet(x, JetRequest::value()).v - c.T_m;
    acc += (us * us + ul * ul) * interface_weight(f.phi.jet(x, JetRequest::value()).v, c.eps_gamma);
  }
  return acc / static_cast<double>(b.size());
}

/// Unit normal ∇φ/|∇φ| at a point; throws on a degenerate gradient.
template <class PF>
std::array<double, 2> unit_normal(const PF& phi, const std::array<double, 3>& x) {
  const auto j = phi.jet(x, JetRequest::first(space_dirs<3>()));
  const double g = std::hypot(j.d1[0], j.d1[1]);
  if (!(g >= kDegenerateGradient)) throw DegenerateGradient("level-set gradient vanishes", x[0], x[1], x[2]);
  return {j.d1[0] / g, j.d1[1] / g};
}

/// V_n = (k_s ∇u_s·n − k_l ∇u_l·n) / (ρ_s L) at a point with a given unit normal.
template <class US, class UL>
double stefan_velocity(const US& u_s, const UL& u_l, const std::array<double, 3>& x, const std::array<double, 2>& n,
                       const PhysicsConfig& c) {
  const double nn = std::hypot(n[0], n[1]);
  if (std::abs(nn - 1.0) > 1e-8) throw DegenerateGradient("normal is not a unit vector", x[0], x[1], x[2]);
  const auto us = u_s.jet(x, JetRequest::first(space_dirs<3>()));
  const auto ul = u_l.jet(x, JetRequest::first(space_dirs<3>()));
  return stefan_speed<double, 3>(us, ul, n, c);
}

/// Extended interface velocity at an arbitrary point; throws on degenerate
/// gradients. `clamped` (optional) reports a projection clipped to Ω.
template <class FS>
double extend_velocity(const FS& f, const std::array<double, 3>& x, const PhysicsConfig& c, bool* clamped = nullptr) {
  const auto ph = f.phi.jet(x, JetRequest::first(all_dirs<3>()));
  if (!(std::hypot(ph.d1[0], ph.d1[1]) >= kDegenerateGradient))
    throw DegenerateGradient("level-set gradient vanishes", x[0], x[1], x[2]);
  const Extension<double> e = extend_velocity_2d<double>(f, x, ph, c);
  if (!e.ok) throw DegenerateGradient("level-set gradient vanishes at the projected point", x[0], x[1], x[2]);
  if (clamped != nullptr) *clamped = e.clamped;
  return e.speed;
}

template <class FS>
double loss_advection(const FS& f, const SampleBatch& b, const PhysicsConfig& c, PhysicsDiagnostics* diag = nullptr) {
  detail::require_points(b, "loss_advection");
  double acc = 0.0;
  for (const auto& p : b.points) acc += domain_terms_2d<double>(f, coords<3>(p), c, diag).advection;
  return acc / static_cast<double>(b.size());
}

/// mean (|∇φ| − 1)² over the spatial gradient.
template <std::size_t N, class PF>
double loss_eikonal(const PF& phi, const SampleBatch& b) {
  detail::require_points(b, "loss_eikonal");
  double acc = 0.0;
  for (const auto& p : b.points) {
    const auto j = phi.jet(coords<N>(p), JetRequest::first(space_dirs<N>()));
    double g2 = 0.0;
    for (std::size_t k = 0; k + 1 < N; ++k) g2 += j.d1[k] * j.d1[k];
    const double e = std::sqrt(g2) - 1.0;
    acc += e * e;
  }
  return acc / static_cast<double>(b.size());
}

template <std::size_t N, class FS>
double loss_bc(const FS& f, const SampleBatch& b, const PhysicsConfig& c) {
  detail::require_points(b, "loss_bc");
  if (b.temperature.size() != b.size()) throw EmptyBatch("loss_bc: boundary batch is missing targets");
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) acc += bc_point<N, double>(f, b, i, c);
  return acc / static_cast<double>(b.size());
}

template <std::size_t N, class FS>
double loss_ic(const FS& f, const SampleBatch& b, const PhysicsConfig& c) {
  detail::require_points(b, "loss_ic");
  if (b.temperature.size() != b.size() || b.phi.size() != b.size())
    throw EmptyBatch("loss_ic: initial batch is missing targets");
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) acc += ic_point<N, double>(f, b, i, c);
  return acc / static_cast<double>(b.size());
}

template <class FS>
double loss_origin_pin(const FS& f, std::span<const double> times, const PhysicsConfig& c) {
  if (times.empty()) throw EmptyBatch("loss_origin_pin: empty batch");
  double acc = 0.0;
  for (double t : times) acc += origin_pin_point<double>(f, t, c);
  return acc / static_cast<double>(times.size());
}

template <class FS>
double loss_stefan_1d(const FS& f, std::span<const double> times, const PhysicsConfig& c) {
  if (times.empty()) throw EmptyBatch("loss_stefan_1d: empty batch");
  double acc = 0.0;
  for (double t : times) acc += interface_terms_1d<double>(f, t, c).stefan;
  return acc / static_cast<double>(times.size());
}

template <class FS>
double loss_continuity_1d(const FS& f, std::span<const double> times, const PhysicsConfig& c) {
  if (times.empty()) throw EmptyBatch("loss_continuity_1d: empty batch");
  double acc = 0.0;
  for (double t : times) acc += interface_terms_1d<double>(f, t, c).continuity;
  return acc / static_cast<double>(times.size());
}

/// Times of a batch (last coordinate of each point).
inline std::vector<double> batch_times(const SampleBatch& b) {
  std::vector<double> t;
  t.reserve(b.size());
  for (const auto& p : b.points) t.push_back(p[static_cast<std::size_t>(b.dim)]);
  return t;
}

// ---------------------------------------------------------------------------
// Assembly.

/// Term order used by per-point visitors; matches LossBreakdown.
enum TermIndex : std::size_t {
  kPdeS,
  kPdeL,
  kInterface,
  kAdvection,
  kEikonal,
  kBc,
  kIc,
  kStefan1d,
  kContinuity1d,
  kOriginPin,
  kNumTerms
};

inline std::array<double, kNumTerms> weight_array(const LossWeights& w) {
  return {w.pde_s, w.pde_l, w.interface, w.advection, w.eikonal, w.bc, w.ic, w.stefan_1d, w.continuity_1d, w.origin_pin};
}

inline void store_terms(LossBreakdown& lb, const std::array<double, kNumTerms>& v) {
  lb.pde_s = v[kPdeS];
  lb.pde_l = v[kPdeL];
  lb.interface = v[kInterface];
  lb.advection = v[kAdvection];
  lb.eikonal = v[kEikonal];
  lb.bc = v[kBc];
  lb.ic = v[kIc];
  lb.stefan_1d = v[kStefan1d];
  lb.continuity_1d = v[kContinuity1d];
  lb.origin_pin = v[kOriginPin];
}

template <class S>
struct PointTerms {
  std::array<S, kNumTerms> value{};
  std::uint16_t active = 0;
  void set(TermIndex i, const S& v) {
    value[i] = v;
    active = static_cast<std::uint16_t>(active | (1u << i));
  }
  bool has(std::size_t i) const { return (active >> i) & 1u; }
};

inline void check_batches(const Batches& b) {
  detail::require_points(b.domain, "assemble_loss: domain");
  detail::require_points(b.boundary, "assemble_loss: boundary");
  detail::require_points(b.initial, "assemble_loss: initial");
  if (b.boundary.temperature.size() != b.boundary.size()) throw EmptyBatch("assemble_loss: boundary targets missing");
  if (b.initial.temperature.size() != b.initial.size() || b.initial.phi.size() != b.initial.size())
    throw EmptyBatch("assemble_loss: initial targets missing");
}

/// Walks every collocation point of every active term. `fields()` is called
/// once per point and returns the field set to evaluate (for taped scalars
/// this is where the tape gets reset); `sink(terms, inv_count)` receives the
/// raw per-point contributions. N = 2 is the 1D problem, N = 3 the 2D one.
template <std::size_t N, class S, class MakeFields, class Sink>
void visit_loss_points(const Batches& b, const PhysicsConfig& c, MakeFields&& fields, Sink&& sink,
                       PhysicsDiagnostics* diag) {
  static_assert(N == 2 || N == 3);
  check_batches(b);
  const double nd = 1.0 / static_cast<double>(b.domain.size());
  const double nb = 1.0 / static_cast<double>(b.boundary.size());
  const double ni = 1.0 / static_cast<double>(b.initial.size());

  for (const auto& p : b.domain.points) {
    const auto& f = fields();
    PointTerms<S> pt;
    if constexpr (N == 3) {
      const DomainTerms<S> t = domain_terms_2d<S>(f, coords<3, S>(p), c, diag);
      pt.set(kPdeS, t.pde_s);
      pt.set(kPdeL, t.pde_l);
      pt.set(kInterface, t.interface);
      pt.set(kEikonal, t.eikonal);
      pt.set(kAdvection, t.advection);
    } else {
      const DomainTerms<S> t = domain_terms_1d<S>(f, coords<2, S>(p), c);
      const InterfaceTerms1D<S> it = interface_terms_1d<S>(f, S(p[1]), c);
      pt.set(kPdeS, t.pde_s);
      pt.set(kPdeL, t.pde_l);
      pt.set(kStefan1d, it.stefan);
      pt.set(kContinuity1d, it.continuity);
    }
    sink(pt, nd);
  }
  for (std::size_t i = 0; i < b.boundary.size(); ++i) {
    const auto& f = fields();
    PointTerms<S> pt;
    pt.set(kBc, bc_point<N, S>(f, b.boundary, i, c));
    if constexpr (N == 3) {
      if (c.origin_pin) pt.set(kOriginPin, origin_pin_point<S>(f, b.boundary.points[i][2], c));
    }
    sink(pt, nb);
  }
  for (std::size_t i = 0; i < b.initial.size(); ++i) {
    const auto& f = fields();
    PointTerms<S> pt;
    pt.set(kIc, ic_point<N, S>(f, b.initial, i, c));
    sink(pt, ni);
  }
}

/// Every loss term and the weighted total for a given field set.
template <std::size_t N, class FS>
LossBreakdown assemble_loss(const FS& f, const Batches& b, const PhysicsConfig& c, const LossWeights& w = {},
                            PhysicsDiagnostics* diag = nullptr) {
  std::array<double, kNumTerms> acc{};
  visit_loss_points<N, double>(
      b, c, [&]() -> const FS& { return f; },
      [&](const PointTerms<double>& pt, double inv) {
        for (std::size_t k = 0; k < kNumTerms; ++k)
          if (pt.has(k)) acc[k] += pt.value[k] * inv;
      },
      diag);
  LossBreakdown lb;
  lb.weights = w;
  store_terms(lb, acc);
  lb.total = lb.weighted_sum();
  if (!std::isfinite(lb.total)) throw NonFiniteError("loss is not finite");
  return lb;
}

/// Loss breakdown plus the gradient of the weighted total with respect to
/// `grad.size()` tape parameters. `make_fields(tape)` builds the taped field
/// set whose networks read parameters from the tape. Each collocation point
/// gets its own tape sweep, so memory stays bounded by one point's graph.
template <std::size_t N, class MakeTaped>
LossBreakdown loss_and_gradient(MakeTaped&& make_fields, const Batches& b, const PhysicsConfig& c,
                                const LossWeights& w, std::span<double> grad, PhysicsDiagnostics* diag = nullptr) {
  std::fill(grad.begin(), grad.end(), 0.0);
  thread_local Tape tape;
  using FS = decltype(make_fields(tape));
  std::optional<FS> current;
  const auto wa = weight_array(w);
  std::array<double, kNumTerms> acc{};
  visit_loss_points<N, Var>(
      b, c,
      [&]() -> const FS& {
        tape.reset(grad.size());
        current.emplace(make_fields(tape));
        return *current;
      },
      [&](const PointTerms<Var>& pt, double inv) {
        Var total(0.0);
        for (std::size_t k = 0; k < kNumTerms; ++k) {
          if (!pt.has(k)) continue;
          acc[k] += pt.value[k].value * inv;
          if (wa[k] != 0.0) total = total + pt.value[k] * (wa[k] * inv);
        }
        if (!std::isfinite(total.value)) throw NonFiniteError("loss is not finite");
        tape.accumulate_gradient(total, grad);
      },
      diag);
  LossBreakdown lb;
  lb.weights = w;
  store_terms(lb, acc);
  lb.total = lb.weighted_sum();
  return lb;
}

}  // namespace stefan_kan
