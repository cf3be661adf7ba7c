// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration as flat `section.key = value` text.
//
// Lines are `key = value`; `#` starts a comment. Unknown keys and
// out-of-range values raise ConfigError naming the key. Physics values
// written as `auto` (T_inf, eps_gamma) are derived when the run starts;
// the resolved snapshot has every key with its final value.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "stefan_kan/analytic.hpp"
#include "stefan_kan/error.hpp"
#include "stefan_kan/kan_io.hpp"
#include "stefan_kan/metrics.hpp"
#include "stefan_kan/model.hpp"
#include "stefan_kan/trainer.hpp"

namespace stefan_kan {

struct EvalConfig {
  EvalGrid grid;
  int n_rays = 64;
};

struct RunConfig {
  PhysicsConfig physics;
  NetworkSpec network;
  TrainConfig trainer;
  EvalConfig eval;

  Problem problem() const { return physics.problem; }
};

inline RunConfig default_run_config(Problem p) {
  RunConfig r;
  r.physics = p == Problem::stefan1d ? default_1d() : default_2d();
  r.network = NetworkSpec::for_problem(p);
  if (p == Problem::stefan2d) {
    r.trainer.n_dom = 2000;
    // Only the few points inside the narrow band see the interface term.
    r.trainer.weights.interface = 10.0;
  }
  return r;
}

inline Problem parse_problem(const std::string& s) {
  if (s == "stefan1d") return Problem::stefan1d;
  if (s == "stefan2d") return Problem::stefan2d;
  throw ConfigError("problem", "unknown problem '" + s + "' (expected stefan1d or stefan2d)");
}

namespace config_detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline double to_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

/// `auto` maps to NaN.
inline double to_real_or_auto(const std::string& key, const std::string& v) {
  if (v == "auto") return std::numeric_limits<double>::quiet_NaN();
  return to_real(key, v);
}

inline std::string real_or_auto(double v) { return std::isnan(v) ? "auto" : format_double(v); }

inline std::vector<int> to_shape(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const long long w = to_int(key, trim(part));
    if (w < 1 || w > 4096) throw ConfigError(key, "layer widths must be in [1, 4096]");
    out.push_back(static_cast<int>(w));
  }
  if (out.size() < 2) throw ConfigError(key, "shape needs at least two widths");
  return out;
}

inline std::string shape_text(const std::vector<int>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out;
}

struct Field {
  const char* key;
  int dims;  // bit 0: used by stefan1d, bit 1: used by stefan2d
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SK_REAL(KEY, DIMS, EXPR)                                                                        \
  Field {                                                                                               \
    KEY, DIMS, [](RunConfig& r, const std::string& k, const std::string& v) { EXPR = to_real(k, v); }, \
        [](const RunConfig& r) { return format_double(EXPR); }                                         \
  }
#define SK_AUTO(KEY, DIMS, EXPR)                                                                                \
  Field {                                                                                                       \
    KEY, DIMS, [](RunConfig& r, const std::string& k, const std::string& v) { EXPR = to_real_or_auto(k, v); }, \
        [](const RunConfig& r) { return real_or_auto(EXPR); }                                                  \
  }
#define SK_INT(KEY, DIMS, EXPR, TYPE)                                                                                 \
  Field {                                                                                                             \
    KEY, DIMS, [](RunConfig& r, const std::string& k, const std::string& v) { EXPR = static_cast<TYPE>(to_int(k, v)); }, \
        [](const RunConfig& r) { return std::to_string(EXPR); }                                                      \
  }
#define SK_COUNT(KEY, DIMS, EXPR)                                                                                 \
  Field {                                                                                                         \
    KEY, DIMS, [](RunConfig& r, const std::string& k, const std::string& v) { EXPR = static_cast<std::size_t>(to_uint(k, v)); }, \
        [](const RunConfig& r) { return std::to_string(EXPR); }                                                  \
  }
#define SK_BOOL(KEY, DIMS, EXPR)                                                                        \
  Field {                                                                                               \
    KEY, DIMS, [](RunConfig& r, const std::string& k, const std::string& v) { EXPR = to_bool(k, v); }, \
        [](const RunConfig& r) { return std::string((EXPR) ? "true" : "false"); }                      \
  }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"problem", 3,
            [](RunConfig& r, const std::string&, const std::string& v) {
              if (parse_problem(v) != r.physics.problem)
                throw ConfigError("problem", "config is for " + v + " but the run is " + problem_name(r.physics.problem));
            },
            [](const RunConfig& r) { return std::string(problem_name(r.physics.problem)); }},
      SK_REAL("physics.alpha_s", 3, r.physics.alpha_s),
      SK_REAL("physics.alpha_l", 3, r.physics.alpha_l),
      SK_REAL("physics.k_s", 3, r.physics.k_s),
      SK_REAL("physics.k_l", 3, r.physics.k_l),
      SK_REAL("physics.rho_s", 3, r.physics.rho_s),
      SK_REAL("physics.latent", 3, r.physics.latent),
      SK_REAL("physics.T_m", 3, r.physics.T_m),
      SK_REAL("physics.T_1", 1, r.physics.T_1),
      SK_REAL("physics.T_2", 1, r.physics.T_2),
      SK_REAL("physics.s0", 1, r.physics.s0),
      SK_BOOL("physics.step_ic", 1, r.physics.step_ic),
      SK_AUTO("physics.T_inf", 2, r.physics.T_inf),
      SK_REAL("physics.R0", 2, r.physics.R0),
      SK_BOOL("physics.origin_pin", 2, r.physics.origin_pin),
      SK_REAL("physics.x_min", 3, r.physics.domain.at(0).lo),
      SK_REAL("physics.x_max", 3, r.physics.domain.at(0).hi),
      SK_REAL("physics.y_min", 2, r.physics.domain.at(1).lo),
      SK_REAL("physics.y_max", 2, r.physics.domain.at(1).hi),
      SK_REAL("physics.t_start", 3, r.physics.t_start),
      SK_REAL("physics.t_end", 3, r.physics.t_end),
      SK_REAL("physics.beta", 3, r.physics.beta),
      SK_AUTO("physics.eps_gamma", 3, r.physics.eps_gamma),
      Field{"network.temperature_shape", 3,
            [](RunConfig& r, const std::string& k, const std::string& v) { r.network.temperature_shape = to_shape(k, v); },
            [](const RunConfig& r) { return shape_text(r.network.temperature_shape); }},
      Field{"network.interface_shape", 3,
            [](RunConfig& r, const std::string& k, const std::string& v) { r.network.interface_shape = to_shape(k, v); },
            [](const RunConfig& r) { return shape_text(r.network.interface_shape); }},
      SK_REAL("network.grid_lo", 3, r.network.grid.lo),
      SK_REAL("network.grid_hi", 3, r.network.grid.hi),
      SK_INT("network.grid_intervals", 3, r.network.grid.intervals, int),
      SK_INT("network.grid_degree", 3, r.network.grid.degree, int),
      SK_INT("trainer.epochs", 3, r.trainer.epochs, long long),
      SK_REAL("trainer.lr", 3, r.trainer.lr),
      SK_REAL("trainer.weight_decay", 3, r.trainer.weight_decay),
      SK_REAL("trainer.adam_beta1", 3, r.trainer.adam_beta1),
      SK_REAL("trainer.adam_beta2", 3, r.trainer.adam_beta2),
      SK_REAL("trainer.adam_eps", 3, r.trainer.adam_eps),
      SK_REAL("trainer.clip_norm", 3, r.trainer.clip_norm),
      SK_REAL("trainer.plateau_factor", 3, r.trainer.plateau_factor),
      SK_INT("trainer.plateau_patience", 3, r.trainer.plateau_patience, long long),
      SK_REAL("trainer.lr_min", 3, r.trainer.lr_min),
      SK_INT("trainer.resample_every", 3, r.trainer.resample_every, long long),
      SK_INT("trainer.checkpoint_every", 3, r.trainer.checkpoint_every, long long),
      Field{"trainer.seed", 3,
            [](RunConfig& r, const std::string& k, const std::string& v) { r.trainer.seed = to_uint(k, v); },
            [](const RunConfig& r) { return std::to_string(r.trainer.seed); }},
      SK_COUNT("sampler.n_dom", 3, r.trainer.n_dom),
      SK_COUNT("sampler.n_bc", 3, r.trainer.n_bc),
      SK_COUNT("sampler.n_ic", 3, r.trainer.n_ic),
      SK_REAL("loss.pde_s", 3, r.trainer.weights.pde_s),
      SK_REAL("loss.pde_l", 3, r.trainer.weights.pde_l),
      SK_REAL("loss.interface", 2, r.trainer.weights.interface),
      SK_REAL("loss.advection", 2, r.trainer.weights.advection),
      SK_REAL("loss.eikonal", 2, r.trainer.weights.eikonal),
      SK_REAL("loss.bc", 3, r.trainer.weights.bc),
      SK_REAL("loss.ic", 3, r.trainer.weights.ic),
      SK_REAL("loss.stefan_1d", 1, r.trainer.weights.stefan_1d),
      SK_REAL("loss.continuity_1d", 1, r.trainer.weights.continuity_1d),
      SK_REAL("loss.origin_pin", 2, r.trainer.weights.origin_pin),
      SK_INT("eval.grid_space", 3, r.eval.grid.space, int),
      SK_INT("eval.grid_time", 3, r.eval.grid.time, int),
      SK_INT("eval.n_rays", 2, r.eval.n_rays, int),
  };
  return table;
}

#undef SK_REAL
#undef SK_AUTO
#undef SK_INT
#undef SK_COUNT
#undef SK_BOOL

inline int dim_bit(Problem p) { return p == Problem::stefan1d ? 1 : 2; }

}  // namespace config_detail

/// Applies one `key=value` assignment.
inline void set_config_value(RunConfig& r, const std::string& key, const std::string& value) {
  for (const auto& f : config_detail::fields()) {
    if (key != f.key) continue;
    if ((f.dims & config_detail::dim_bit(r.problem())) == 0)
      throw ConfigError(key, std::string("not used by ") + problem_name(r.problem()));
    f.set(r, key, value);
    return;
  }
  throw ConfigError(key, "unknown configuration key");
}

/// Parses a `key=value` override as given to --set.
inline void apply_override(RunConfig& r, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "override must look like key=value");
  set_config_value(r, config_detail::trim(std::string_view(assignment).substr(0, eq)),
                   config_detail::trim(std::string_view(assignment).substr(eq + 1)));
}

inline void parse_config_text(RunConfig& r, const std::string& text, const std::string& origin = "config") {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = config_detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno), "expected key = value, got '" + t + "'");
    set_config_value(r, config_detail::trim(std::string_view(t).substr(0, eq)),
                     config_detail::trim(std::string_view(t).substr(eq + 1)));
  }
}

/// First `problem = ...` assignment in a config text, if any.
inline std::optional<Problem> problem_in_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (config_detail::trim(std::string_view(line).substr(0, eq)) == "problem")
      return parse_problem(config_detail::trim(std::string_view(line).substr(eq + 1)));
  }
  return std::nullopt;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Range checks across all sections.
inline void validate(const RunConfig& r) {
  const PhysicsConfig& c = r.physics;
  const auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, "must be positive");
  };
  positive("physics.alpha_s", c.alpha_s);
  positive("physics.alpha_l", c.alpha_l);
  positive("physics.k_s", c.k_s);
  positive("physics.k_l", c.k_l);
  positive("physics.rho_s", c.rho_s);
  positive("physics.latent", c.latent);
  positive("physics.beta", c.beta);
  if (!std::isnan(c.eps_gamma)) positive("physics.eps_gamma", c.eps_gamma);
  if (!(c.domain[0].hi > c.domain[0].lo)) throw ConfigError("physics.x_max", "must exceed physics.x_min");
  if (c.dim() == 2 && !(c.domain[1].hi > c.domain[1].lo)) throw ConfigError("physics.y_max", "must exceed physics.y_min");
  if (!(c.t_end > c.t_start)) throw ConfigError("physics.t_end", "must exceed physics.t_start");
  if (c.problem == Problem::stefan1d) {
    if (!(c.T_1 < c.T_m)) throw ConfigError("physics.T_1", "must be below physics.T_m");
    if (!(c.T_2 > c.T_m)) throw ConfigError("physics.T_2", "must be above physics.T_m");
    if (!(c.s0 > c.domain[0].lo && c.s0 < c.domain[0].hi)) throw ConfigError("physics.s0", "must lie inside the domain");
    if (c.t_start < 0.0) throw ConfigError("physics.t_start", "must be non-negative");
  } else {
    if (!(c.t_start > 0.0)) throw ConfigError("physics.t_start", "must be positive for stefan2d");
    positive("physics.R0", c.R0);
    if (!std::isnan(c.T_inf) && !(c.T_inf < c.T_m)) throw ConfigError("physics.T_inf", "must be below physics.T_m");
  }
  const NetworkSpec& n = r.network;
  const int in = c.dim() + 1;
  if (n.temperature_shape.front() != in || n.temperature_shape.back() != 1)
    throw ConfigError("network.temperature_shape", "must start with " + std::to_string(in) + " and end with 1");
  const int if_in = c.problem == Problem::stefan1d ? 1 : in;
  if (n.interface_shape.front() != if_in || n.interface_shape.back() != 1)
    throw ConfigError("network.interface_shape", "must start with " + std::to_string(if_in) + " and end with 1");
  if (!(n.grid.hi > n.grid.lo)) throw ConfigError("network.grid_hi", "must exceed network.grid_lo");
  if (n.grid.intervals < 1) throw ConfigError("network.grid_intervals", "must be at least 1");
  if (n.grid.degree < 0 || n.grid.degree > kMaxSplineDegree)
    throw ConfigError("network.grid_degree", "must be in [0, " + std::to_string(kMaxSplineDegree) + "]");
  r.trainer.validate();
  const LossWeights& w = r.trainer.weights;
  for (auto [key, v] : {std::pair{"loss.pde_s", w.pde_s}, std::pair{"loss.pde_l", w.pde_l},
                        std::pair{"loss.interface", w.interface}, std::pair{"loss.advection", w.advection},
                        std::pair{"loss.eikonal", w.eikonal}, std::pair{"loss.bc", w.bc}, std::pair{"loss.ic", w.ic},
                        std::pair{"loss.stefan_1d", w.stefan_1d}, std::pair{"loss.continuity_1d", w.continuity_1d},
                        std::pair{"loss.origin_pin", w.origin_pin}})
    if (!(v >= 0.0)) throw ConfigError(key, "must be non-negative");
  if (r.eval.grid.space < 2) throw ConfigError("eval.grid_space", "must be at least 2");
  if (r.eval.grid.time < 1) throw ConfigError("eval.grid_time", "must be at least 1");
  if (r.eval.n_rays < 4) throw ConfigError("eval.n_rays", "must be at least 4");
}

/// Defaults for `problem`, then the file (if any), then overrides; validated.
inline RunConfig load_run_config(Problem problem, const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig r = default_run_config(problem);
  if (!path.empty()) parse_config_text(r, read_text_file(path), path);
  for (const auto& o : overrides) apply_override(r, o);
  validate(r);
  return r;
}

/// Every key used by the problem, one per line, values resolved.
inline std::string resolved_config_text(RunConfig r) {
  r.physics = resolve(r.physics);
  std::string out = "# resolved configuration\n";
  for (const auto& f : config_detail::fields()) {
    if ((f.dims & config_detail::dim_bit(r.problem())) == 0) continue;
    out += std::string(f.key) + " = " + f.get(r) + "\n";
  }
  return out;
}

}  // namespace stefan_kan
