// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Error metrics against the analytic solutions, evaluated on a fixed
// space-time grid, and interface extraction from trained fields.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "stefan_kan/analytic.hpp"
#include "stefan_kan/error.hpp"
#include "stefan_kan/jet.hpp"
#include "stefan_kan/kan_io.hpp"
#include "stefan_kan/physics.hpp"
#include "stefan_kan/sampler.hpp"

namespace stefan_kan {

namespace detail {
inline void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size())
    throw ShapeError("metric inputs differ in length (" + std::to_string(pred.size()) + " vs " +
                     std::to_string(truth.size()) + ")");
  if (pred.empty()) throw EmptyBatch("metric inputs are empty");
}
}  // namespace detail

inline double mae(std::span<const double> pred, std::span<const double> truth) {
  detail::check_pair(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

inline double mse(std::span<const double> pred, std::span<const double> truth) {
  detail::check_pair(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

inline double rms(std::span<const double> pred, std::span<const double> truth) { return std::sqrt(mse(pred, truth)); }

inline double r2(std::span<const double> pred, std::span<const double> truth) {
  detail::check_pair(pred, truth);
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
    ss_res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  }
  if (!(ss_tot > 0.0)) throw DomainError("r2 needs a truth sequence with nonzero variance");
  return 1.0 - ss_res / ss_tot;
}

struct MetricSet {
  double mae = 0.0;
  double mse = 0.0;
  double rms = 0.0;
  double r2 = 0.0;
  std::size_t count = 0;
};

inline MetricSet metric_set(std::span<const double> pred, std::span<const double> truth) {
  return {mae(pred, truth), mse(pred, truth), rms(pred, truth), r2(pred, truth), pred.size()};
}

/// Regular evaluation grid: `space` points per spatial axis (endpoints
/// included) and `time` slices over [t_start, t_end].
struct EvalGrid {
  int space = 101;
  int time = 51;
};

inline double grid_coord(double lo, double hi, int i, int n) {
  if (n == 1) return 0.5 * (lo + hi);
  return i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

inline std::vector<double> grid_times(const PhysicsConfig& c, int n) {
  std::vector<double> t;
  for (int j = 0; j < n; ++j) t.push_back(grid_coord(c.t_start, c.t_end, j, n));
  return t;
}

/// Spatial grid points (x[, y]) in row-major order (x fastest).
inline std::vector<std::array<double, 2>> grid_space(const PhysicsConfig& c, int n) {
  std::vector<std::array<double, 2>> pts;
  if (c.dim() == 1) {
    for (int i = 0; i < n; ++i) pts.push_back({grid_coord(c.domain[0].lo, c.domain[0].hi, i, n), 0.0});
  } else {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        pts.push_back({grid_coord(c.domain[0].lo, c.domain[0].hi, i, n), grid_coord(c.domain[1].lo, c.domain[1].hi, j, n)});
  }
  return pts;
}

/// Mask composition for readout. An infinite β gives the sharp phase
/// indicator (used when the fields are exact oracles).
inline double compose_temperature(double us, double ul, double phi, double beta) {
  if (std::isinf(beta)) return phi < 0.0 ? us : (phi > 0.0 ? ul : 0.5 * (us + ul));
  const Masks<double> h = heaviside_masks(phi, beta);
  return h.solid * us + h.liquid * ul;
}

struct FieldSample {
  double u = 0.0;
  double phi = 0.0;
};

/// Composed temperature and level set of a field set at one point.
template <std::size_t N, class FS>
FieldSample sample_fields(const FS& f, const SpaceTime& p, double beta) {
  const auto x = coords<N>(p);
  try {
    const double us = f.u_s.jet(x, JetRequest::value()).v;
    const double ul = f.u_l.jet(x, JetRequest::value()).v;
    const double ph = f.phi.jet(x, JetRequest::value()).v;
    return {compose_temperature(us, ul, ph, beta), ph};
  } catch (const Error& e) {
    std::string where = "(";
    for (std::size_t i = 0; i < N; ++i) where += (i ? ", " : "") + format_double(p[i]);
    throw EvaluationError(std::string(e.what()) + " at grid point " + where + ")", p[0]);
  }
}

inline SpaceTime make_point(int dim, const std::array<double, 2>& x, double t) {
  SpaceTime p{};
  p[0] = x[0];
  if (dim == 2) p[1] = x[1];
  p[static_cast<std::size_t>(dim)] = t;
  return p;
}

struct FieldMetrics {
  MetricSet temperature;
  MetricSet levelset;  // 2D: φ against the exact SDF
  MetricSet interface;  // 1D: s(t) against the exact interface, on the grid times
};

/// Temperature (and level-set / interface) metrics over the evaluation grid.
template <std::size_t N, class FS>
FieldMetrics evaluate_fields(const FS& f, const PhysicsConfig& c, double beta, const EvalGrid& g = {}) {
  const ExactSolution exact(c);
  const auto space = grid_space(c, g.space);
  const auto times = grid_times(c, g.time);
  std::vector<double> up, ue, pp, pe;
  up.reserve(space.size() * times.size());
  ue.reserve(up.capacity());
  for (double t : times)
    for (const auto& x : space) {
      const SpaceTime p = make_point(c.dim(), x, t);
      const FieldSample s = sample_fields<N>(f, p, beta);
      up.push_back(s.u);
      ue.push_back(exact.temperature(p));
      if constexpr (N == 3) {
        pp.push_back(s.phi);
        pe.push_back(exact.phi(p));
      }
    }
  FieldMetrics m;
  m.temperature = metric_set(up, ue);
  if constexpr (N == 3) {
    m.levelset = metric_set(pp, pe);
  } else {
    std::vector<double> sp, se;
    for (double t : times) {
      sp.push_back(f.phi.s.jet(std::array<double, 1>{t}, JetRequest::value()).v);
      se.push_back(exact.neumann().interface(t));
    }
    m.interface = metric_set(sp, se);
  }
  return m;
}

template <std::size_t N, class FS>
MetricSet evaluate_temperature(const FS& f, const PhysicsConfig& c, double beta, const EvalGrid& g = {}) {
  return evaluate_fields<N>(f, c, beta, g).temperature;
}

/// s(t) read from a one-input interface field.
template <class SField>
std::vector<double> extract_interface_1d(const SField& s, std::span<const double> times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(s.jet(std::array<double, 1>{t}, JetRequest::value()).v);
  return out;
}

struct RadiusEstimate {
  double radius = 0.0;  // mean root radius over the accepted rays
  double spread = 0.0;  // population standard deviation of the roots
  int rays_used = 0;
  int rays_excluded = 0;
};

/// Zero of φ(r·(cos θ, sin θ), t) along n_rays equally spaced rays from the
/// origin, by bisection to 1e-8 over r ∈ (0, r_max].
template <class PhiField>
RadiusEstimate extract_radius_2d(const PhiField& phi, double t, int n_rays, double r_max) {
  if (n_rays < 4) throw DomainError("extract_radius_2d needs at least 4 rays");
  if (!(r_max > 0.0)) throw DomainError("extract_radius_2d needs a positive search radius");
  const auto eval = [&](double r, double th) {
    return phi.jet(std::array<double, 3>{r * std::cos(th), r * std::sin(th), t}, JetRequest::value()).v;
  };
  RadiusEstimate est;
  std::vector<double> roots;
  const double r_lo = 1e-12 * r_max;
  for (int k = 0; k < n_rays; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_rays);
    double lo = r_lo, hi = r_max;
    double flo = eval(lo, th);
    const double fhi = eval(hi, th);
    if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0.0) == (fhi > 0.0) || flo == 0.0) {
      if (flo == 0.0) {
        roots.push_back(lo);
        continue;
      }
      ++est.rays_excluded;
      continue;
    }
    while (hi - lo > 1e-8) {
      const double mid = 0.5 * (lo + hi);
      const double fm = eval(mid, th);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  if (roots.empty()) throw RootBracketError("no ray crosses the zero level set");
  double mean = 0.0;
  for (double r : roots) mean += r;
  mean /= static_cast<double>(roots.size());
  double var = 0.0;
  for (double r : roots) var += (r - mean) * (r - mean);
  est.radius = mean;
  est.spread = std::sqrt(var / static_cast<double>(roots.size()));
  est.rays_used = static_cast<int>(roots.size());
  return est;
}

}  // namespace stefan_kan
