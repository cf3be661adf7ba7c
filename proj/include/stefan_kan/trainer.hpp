// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Training loop: AdamW, global-norm clipping, plateau learning-rate decay,
// and collocation resampling.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stefan_kan/analytic.hpp"
#include "stefan_kan/csv.hpp"
#include "stefan_kan/error.hpp"
#include "stefan_kan/model.hpp"
#include "stefan_kan/physics.hpp"
#include "stefan_kan/random.hpp"
#include "stefan_kan/sampler.hpp"

namespace stefan_kan {

struct TrainConfig {
  long long epochs = 20000;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;
  double plateau_factor = 0.5;
  long long plateau_patience = 500;
  double lr_min = 1e-5;
  long long resample_every = 100;
  std::size_t n_dom = 1000;
  std::size_t n_bc = 250;
  std::size_t n_ic = 250;
  std::uint64_t seed = 0;
  long long checkpoint_every = 1000;
  LossWeights weights;

  void validate() const {
    if (epochs < 1) throw ConfigError("trainer.epochs", "must be at least 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("trainer.lr", "must be positive");
    if (!(lr_min > 0.0) || !(lr > lr_min)) throw ConfigError("trainer.lr_min", "must satisfy 0 < lr_min < lr");
    if (!(weight_decay >= 0.0)) throw ConfigError("trainer.weight_decay", "must be non-negative");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("trainer.adam_beta1", "must be in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("trainer.adam_beta2", "must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("trainer.adam_eps", "must be positive");
    if (!(clip_norm > 0.0)) throw ConfigError("trainer.clip_norm", "must be positive");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
      throw ConfigError("trainer.plateau_factor", "must be in (0, 1)");
    if (plateau_patience < 1) throw ConfigError("trainer.plateau_patience", "must be at least 1");
    if (resample_every < 1) throw ConfigError("trainer.resample_every", "must be at least 1");
    if (checkpoint_every < 1) throw ConfigError("trainer.checkpoint_every", "must be at least 1");
    if (n_dom < 1) throw ConfigError("sampler.n_dom", "must be at least 1");
    if (n_bc < 1) throw ConfigError("sampler.n_bc", "must be at least 1");
    if (n_ic < 1) throw ConfigError("sampler.n_ic", "must be at least 1");
  }
};

// ---------------------------------------------------------------------------
// Optimizer pieces.

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long step = 0;
};

/// One AdamW step with decoupled weight decay: θ ← θ(1 − lr·wd), then the
/// bias-corrected Adam update.
inline void adamw_step(std::span<double> params, std::span<const double> grads, AdamState& st, double lr,
                       const TrainConfig& c) {
  if (params.size() != grads.size()) throw ShapeError("adamw_step: parameter and gradient lengths differ");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size()) throw ShapeError("adamw_step: optimizer state length differs");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i])) throw NonFiniteError("non-finite gradient at parameter " + std::to_string(i), i);
  ++st.step;
  const double bc1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(st.step));
  const double decay = 1.0 - lr * c.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    st.m[i] = c.adam_beta1 * st.m[i] + (1.0 - c.adam_beta1) * g;
    st.v[i] = c.adam_beta2 * st.v[i] + (1.0 - c.adam_beta2) * g * g;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] = params[i] * decay - lr * mhat / (std::sqrt(vhat) + c.adam_eps);
  }
}

inline double l2_norm(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

/// Rescales g to norm clip_norm when its global L2 norm exceeds it. Returns
/// the norm before clipping.
inline double clip_gradients(std::span<double> g, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ConfigError("trainer.clip_norm", "must be positive");
  const double n = l2_norm(g);
  if (n > clip_norm) {
    const double s = clip_norm / n;
    for (double& x : g) x *= s;
  }
  return n;
}

struct PlateauState {
  double lr = 1e-3;
  double best = std::numeric_limits<double>::infinity();
  long long bad_epochs = 0;
  long long reductions = 0;
};

/// Consumes the newest entry of `history`. An epoch improves when it beats
/// the best loss by at least 1e-8 relative; after plateau_patience epochs
/// without improvement the rate is multiplied by plateau_factor (floored at
/// lr_min) and the counter restarts.
inline double plateau_scheduler(std::span<const double> history, PlateauState& st, const TrainConfig& c) {
  if (history.empty()) throw EmptyBatch("plateau_scheduler: empty loss history");
  const double loss = history.back();
  if (loss < st.best - 1e-8 * std::abs(st.best) || std::isinf(st.best)) {
    st.best = loss;
    st.bad_epochs = 0;
  } else if (++st.bad_epochs >= c.plateau_patience) {
    st.lr = std::max(st.lr * c.plateau_factor, c.lr_min);
    st.bad_epochs = 0;
    ++st.reductions;
  }
  return st.lr;
}

// ---------------------------------------------------------------------------
// Loop.

struct TrainRecord {
  long long epoch = 0;
  LossBreakdown loss;
  double lr = 0.0;
  double grad_norm = 0.0;
  bool resampled = false;
  double wall_ms = 0.0;
  PhysicsDiagnostics diagnostics;
};

inline std::vector<std::string> train_log_header() {
  return {"epoch",         "pde_s",      "pde_l", "interface", "advection", "eikonal",       "bc",
          "ic",            "stefan_1d",  "continuity_1d", "origin_pin", "total", "lr", "grad_norm",
          "resample_flag", "wall_ms"};
}

inline std::vector<std::string> train_log_row(const TrainRecord& r) {
  const LossBreakdown& l = r.loss;
  return {cell(r.epoch),       cell(l.pde_s),     cell(l.pde_l),      cell(l.interface),   cell(l.advection),
          cell(l.eikonal),     cell(l.bc),        cell(l.ic),         cell(l.stefan_1d),   cell(l.continuity_1d),
          cell(l.origin_pin),  cell(l.total),     cell(r.lr),         cell(r.grad_norm),   cell(r.resampled ? 1 : 0),
          cell(r.wall_ms)};
}

struct TrainHooks {
  std::function<void(const TrainRecord&)> on_epoch;
  /// Called every checkpoint_every epochs and after the last one.
  std::function<void(const StefanModel&, long long epoch)> on_checkpoint;
};

/// Fills physics defaults that depend on other fields (T_inf, ε_Γ).
inline PhysicsConfig resolve(PhysicsConfig c) {
  if (std::isnan(c.eps_gamma)) c.eps_gamma = kEpsGammaPerDiagonal * c.diagonal();
  if (c.problem == Problem::stefan2d && std::isnan(c.T_inf)) c.T_inf = frank_t_inf(c);
  return c;
}

/// Collocation batches for one epoch. The interface-concentrated subset is
/// passed in so callers control its refresh cadence.
inline Batches epoch_batches(const std::vector<SpaceTime>& interface_points, const ExactSolution& exact,
                             const TrainConfig& tc, long long epoch) {
  const PhysicsConfig& c = exact.config();
  const auto e = static_cast<std::uint64_t>(epoch);
  Batches b;
  Rng rd = Rng::substream(tc.seed, "domain", e);
  b.domain = sample_uniform(tc.n_dom - interface_points.size(), c, rd);
  b.domain.points.insert(b.domain.points.begin(), interface_points.begin(), interface_points.end());
  b.domain.rng_seed = tc.seed;
  Rng rb = Rng::substream(tc.seed, "boundary", e);
  b.boundary = sample_boundary(tc.n_bc, exact, rb);
  b.boundary.rng_seed = tc.seed;
  Rng ri = Rng::substream(tc.seed, "initial", e);
  b.initial = sample_initial(tc.n_ic, exact, ri);
  b.initial.rng_seed = tc.seed;
  return b;
}

/// Trains `model` in place and returns one record per epoch. Throws
/// NonFiniteError if the loss or gradient stops being finite; checkpoints
/// written before that point are left untouched.
inline std::vector<TrainRecord> train(StefanModel& model, const PhysicsConfig& physics, const TrainConfig& tc,
                                      const TrainHooks& hooks = {}) {
  tc.validate();
  if (model.kind != ModelKind::kan) throw UnsupportedOperation("only network models can be trained");
  const PhysicsConfig c = resolve(physics);
  if (model.problem != c.problem) throw ShapeError("model and configuration describe different problems");
  const ExactSolution exact(c);
  const std::size_t n_if = interface_count(tc.n_dom);

  std::vector<double> params = model.gather();
  std::vector<double> grad(params.size());
  AdamState adam;
  PlateauState plateau;
  plateau.lr = tc.lr;
  std::vector<double> history;
  std::vector<TrainRecord> records;
  records.reserve(static_cast<std::size_t>(tc.epochs));
  std::vector<SpaceTime> interface_points;

  for (long long epoch = 0; epoch < tc.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainRecord rec;
    rec.epoch = epoch;
    if (epoch % tc.resample_every == 0) {
      Rng rs = Rng::substream(tc.seed, "interface", static_cast<std::uint64_t>(epoch));
      interface_points = sample_interface_points(phi_estimate(model, c), n_if, c, rs);
      rec.resampled = true;
    }
    const Batches b = epoch_batches(interface_points, exact, tc, epoch);
    rec.loss = model_loss_and_gradient(model, b, c, tc.weights, grad, &rec.diagnostics);
    if (!std::isfinite(rec.loss.total)) throw NonFiniteError("loss became non-finite at epoch " + std::to_string(epoch));
    rec.grad_norm = clip_gradients(grad, tc.clip_norm);
    rec.lr = plateau.lr;
    adamw_step(params, grad, adam, plateau.lr, tc);
    model.scatter(params);
    history.push_back(rec.loss.total);
    plateau_scheduler(history, plateau, tc);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    records.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(records.back());
    const bool last = epoch + 1 == tc.epochs;
    if (hooks.on_checkpoint && ((epoch + 1) % tc.checkpoint_every == 0 || last)) hooks.on_checkpoint(model, epoch + 1);
  }
  return records;
}

}  // namespace stefan_kan
