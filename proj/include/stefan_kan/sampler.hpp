// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Collocation batches. Domain batches mix uniform points with points drawn
// toward the current interface estimate: a uniform pool of ten times the
// wanted count is scored by |φ̂| and the smallest scores are kept.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "stefan_kan/analytic.hpp"
#include "stefan_kan/error.hpp"
#include "stefan_kan/physics.hpp"
#include "stefan_kan/random.hpp"

namespace stefan_kan {

/// Level-set estimate used to rank candidate points.
using PhiEstimate = std::function<double(const SpaceTime&)>;

/// round(0.3·n) with halves rounded up.
inline std::size_t interface_count(std::size_t n_dom) { return (3 * n_dom + 5) / 10; }

inline SpaceTime uniform_point(const PhysicsConfig& c, Rng& rng) {
  SpaceTime p{};
  const int d = c.dim();
  for (int i = 0; i < d; ++i) p[i] = rng.uniform(c.domain[i].lo, c.domain[i].hi);
  p[d] = rng.uniform(c.t_start, c.t_end);
  return p;
}

inline SampleBatch sample_uniform(std::size_t n, const PhysicsConfig& c, Rng& rng) {
  SampleBatch b;
  b.kind = BatchKind::domain;
  b.dim = c.dim();
  b.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) b.points.push_back(uniform_point(c, rng));
  return b;
}

/// Bottom-n_interface of a uniform pool of 10·n_interface candidates by
/// (|φ̂|, pool index). Selected points keep their pool time coordinates.
inline std::vector<SpaceTime> sample_interface_points(const PhiEstimate& phi, std::size_t n_interface,
                                                      const PhysicsConfig& c, Rng& rng,
                                                      std::vector<double>* pool_scores = nullptr,
                                                      std::vector<std::size_t>* selected = nullptr) {
  const std::size_t pool_size = 10 * n_interface;
  std::vector<SpaceTime> pool(pool_size);
  std::vector<double> score(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) {
    pool[i] = uniform_point(c, rng);
    score[i] = std::abs(phi(pool[i]));
    if (!std::isfinite(score[i])) throw NonFiniteError("level-set estimate is not finite at a pool point");
  }
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto less = [&](std::size_t a, std::size_t b) { return score[a] < score[b] || (score[a] == score[b] && a < b); };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_interface), order.end(), less);
  order.resize(n_interface);
  std::vector<SpaceTime> out;
  out.reserve(n_interface);
  for (std::size_t i : order) out.push_back(pool[i]);
  if (pool_scores != nullptr) *pool_scores = std::move(score);
  if (selected != nullptr) *selected = std::move(order);
  return out;
}

/// Domain batch of exactly n_dom points: interface-selected points first,
/// then uniform ones.
inline SampleBatch sample_domain(const PhiEstimate& phi, std::size_t n_dom, const PhysicsConfig& c, Rng& rng) {
  if (n_dom == 0) throw EmptyBatch("sample_domain: n_dom must be at least 1");
  const std::size_t n_if = interface_count(n_dom);
  SampleBatch b;
  b.kind = BatchKind::domain;
  b.dim = c.dim();
  b.points = sample_interface_points(phi, n_if, c, rng);
  SampleBatch u = sample_uniform(n_dom - n_if, c, rng);
  b.points.insert(b.points.end(), u.points.begin(), u.points.end());
  return b;
}

/// Exact temperature of the configured benchmark.
class ExactSolution {
 public:
  explicit ExactSolution(const PhysicsConfig& c) : c_(c) {
    if (c.problem == Problem::stefan1d)
      neumann_.emplace_back(c);
    else
      frank_.emplace_back(c);
  }

  const PhysicsConfig& config() const { return c_; }

  double temperature(const SpaceTime& p) const {
    if (!neumann_.empty()) return neumann_[0].temperature(p[0], p[1]);
    return frank_[0].field(std::hypot(p[0], p[1]), p[2]);
  }

  /// Exact level set: x − s(t) in 1D, the circle SDF in 2D.
  double phi(const SpaceTime& p) const {
    if (!neumann_.empty()) return p[0] - neumann_[0].interface(p[1]);
    return std::hypot(p[0], p[1]) - frank_[0].radius(p[2]);
  }

  double initial_temperature(const SpaceTime& p) const {
    if (!neumann_.empty()) return neumann_[0].initial_temperature(p[0]);
    return temperature(p);
  }

  const Neumann1D& neumann() const { return neumann_.at(0); }
  const Frank2D& frank() const { return frank_.at(0); }

 private:
  PhysicsConfig c_;
  std::vector<Neumann1D> neumann_;
  std::vector<Frank2D> frank_;
};

inline SampleBatch sample_boundary(std::size_t n_bc, const ExactSolution& exact, Rng& rng) {
  if (n_bc == 0) throw EmptyBatch("sample_boundary: n_bc must be at least 1");
  const PhysicsConfig& c = exact.config();
  SampleBatch b;
  b.kind = BatchKind::boundary;
  b.dim = c.dim();
  b.points.reserve(n_bc);
  b.temperature.reserve(n_bc);
  const int d = c.dim();
  for (std::size_t i = 0; i < n_bc; ++i) {
    SpaceTime p{};
    // Pick a face uniformly (faces of equal measure in both benchmarks), then
    // a uniform point on it.
    const auto face = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * d)));
    const int axis = face / 2;
    for (int k = 0; k < d; ++k) p[k] = rng.uniform(c.domain[k].lo, c.domain[k].hi);
    p[axis] = face % 2 == 0 ? c.domain[axis].lo : c.domain[axis].hi;
    p[d] = rng.uniform(c.t_start, c.t_end);
    b.points.push_back(p);
    b.temperature.push_back(exact.temperature(p));
  }
  return b;
}

inline SampleBatch sample_initial(std::size_t n_ic, const ExactSolution& exact, Rng& rng) {
  if (n_ic == 0) throw EmptyBatch("sample_initial: n_ic must be at least 1");
  const PhysicsConfig& c = exact.config();
  SampleBatch b;
  b.kind = BatchKind::initial;
  b.dim = c.dim();
  const int d = c.dim();
  for (std::size_t i = 0; i < n_ic; ++i) {
    SpaceTime p{};
    for (int k = 0; k < d; ++k) p[k] = rng.uniform(c.domain[k].lo, c.domain[k].hi);
    p[d] = c.t_start;
    b.points.push_back(p);
    b.temperature.push_back(exact.initial_temperature(p));
    // 1D: φ0 = x − s0, which ties s(t_start) to s0 through the IC term.
    b.phi.push_back(d == 1 ? p[0] - c.s0 : exact.phi(p));
  }
  return b;
}

}  // namespace stefan_kan
