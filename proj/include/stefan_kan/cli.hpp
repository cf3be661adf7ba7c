// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command implementations behind the stefan_kan tool. Each cmd_* returns
// the process exit status: 0 on success, 2 for configuration errors
// (including checkpoint/config mismatches), 3 for runtime aborts.
//
// A training run directory holds:
//   resolved.cfg      every configuration key with its final value
//   checkpoint.txt    latest checkpoint (replaced atomically)
//   train_log.csv     one row per epoch
//   metrics.csv       final metrics on the evaluation grid
//   interface.csv     s(t) or R(t) on the evaluation times
//   error.txt         present only if the run aborted

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stefan_kan/config.hpp"
#include "stefan_kan/csv.hpp"
#include "stefan_kan/error.hpp"
#include "stefan_kan/metrics.hpp"
#include "stefan_kan/model.hpp"
#include "stefan_kan/trainer.hpp"

namespace stefan_kan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kOutEnv = "STEFAN_KAN_OUT";

/// Explicit --out wins; otherwise $STEFAN_KAN_OUT joined with `fallback`.
inline std::string resolve_out_dir(const std::string& out, const std::string& fallback) {
  if (!out.empty()) return out;
  const char* env = std::getenv(kOutEnv);
  if (env == nullptr || *env == '\0') throw ConfigError("out", std::string("no --out given and ") + kOutEnv + " is unset");
  return (std::filesystem::path(env) / fallback).string();
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("cannot create output directory '" + dir + "'");
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os || !(os << text)) throw Error("cannot write " + path);
}

// ---------------------------------------------------------------------------
// Evaluation artifacts shared by train and eval.

/// Readout β: the configured mask sharpness for trained models, a sharp step
/// for analytic oracles.
inline double readout_beta(const StefanModel& m, const PhysicsConfig& c) {
  return m.kind == ModelKind::oracle ? std::numeric_limits<double>::infinity() : c.beta;
}

inline FieldMetrics evaluate_model(const StefanModel& m, const RunConfig& rc) {
  const PhysicsConfig c = resolve(rc.physics);
  const double beta = readout_beta(m, c);
  return with_fields(m, c, [&](const auto& f, auto n) { return evaluate_fields<decltype(n)::value>(f, c, beta, rc.eval.grid); });
}

inline std::string grid_label(const RunConfig& rc) {
  const std::string s = std::to_string(rc.eval.grid.space);
  return (rc.problem() == Problem::stefan1d ? s : s + "x" + s) + "x" + std::to_string(rc.eval.grid.time);
}

inline std::vector<std::string> metrics_header() { return {"metric", "field", "value", "grid", "checkpoint"}; }

inline void write_metrics_csv(const std::string& path, const FieldMetrics& m, const RunConfig& rc,
                              const std::string& checkpoint_id) {
  CsvWriter w(path, metrics_header());
  const auto rows = [&](const char* field, const MetricSet& s) {
    for (auto [name, v] : {std::pair{"mae", s.mae}, std::pair{"mse", s.mse}, std::pair{"rms", s.rms}, std::pair{"r2", s.r2}})
      w.row({name, field, cell(v), grid_label(rc), checkpoint_id});
  };
  rows("temperature", m.temperature);
  if (rc.problem() == Problem::stefan1d)
    rows("interface", m.interface);
  else
    rows("levelset", m.levelset);
}

/// Radius at time t, or NaN fields when no ray crosses the zero level.
inline RadiusEstimate radius_or_nan(const StefanModel& m, const PhysicsConfig& c, double t, int n_rays) {
  const double half = 0.5 * (c.domain[0].hi - c.domain[0].lo);
  try {
    return with_fields(m, c, [&](const auto& f, auto n) -> RadiusEstimate {
      if constexpr (decltype(n)::value == 3) {
        return extract_radius_2d(f.phi, t, n_rays, half);
      } else {
        throw UnsupportedOperation("radius extraction needs a 2D model");
      }
    });
  } catch (const RootBracketError&) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, 0, n_rays};
  }
}

inline void write_interface_csv(const std::string& path, const StefanModel& m, const RunConfig& rc) {
  const PhysicsConfig c = resolve(rc.physics);
  const ExactSolution exact(c);
  const auto times = grid_times(c, rc.eval.grid.time);
  if (c.problem == Problem::stefan1d) {
    CsvWriter w(path, {"t", "s_pred", "s_exact"});
    const auto s = with_fields(m, c, [&](const auto& f, auto n) -> std::vector<double> {
      if constexpr (decltype(n)::value == 2) {
        return extract_interface_1d(f.phi.s, times);
      } else {
        throw UnsupportedOperation("interface extraction needs a 1D model");
      }
    });
    for (std::size_t i = 0; i < times.size(); ++i)
      w.row({cell(times[i]), cell(s[i]), cell(exact.neumann().interface(times[i]))});
  } else {
    CsvWriter w(path, {"t", "R_pred", "R_exact", "spread"});
    for (double t : times) {
      const RadiusEstimate r = radius_or_nan(m, c, t, rc.eval.n_rays);
      w.row({cell(t), cell(r.radius), cell(exact.frank().radius(t)), cell(r.spread)});
    }
  }
}

inline std::string checkpoint_id(const std::string& path, long long epoch) {
  return std::filesystem::path(path).filename().string() + "@" + std::to_string(epoch);
}

inline FieldMetrics write_eval_outputs(const std::string& dir, const StefanModel& m, const RunConfig& rc,
                                       const std::string& id) {
  const FieldMetrics fm = evaluate_model(m, rc);
  write_metrics_csv((std::filesystem::path(dir) / "metrics.csv").string(), fm, rc, id);
  write_interface_csv((std::filesystem::path(dir) / "interface.csv").string(), m, rc);
  return fm;
}

// ---------------------------------------------------------------------------
// Error reporting.

namespace cli_detail {

/// Runs `body`, mapping exceptions to exit codes and a message on `err`.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

inline void check_pair(const StefanModel& m, const RunConfig& rc) {
  try {
    check_compatible(m, rc.physics, rc.network);
  } catch (const ShapeError& e) {
    throw ConfigError("checkpoint", std::string("checkpoint/config mismatch: ") + e.what());
  }
}

/// Loads a config for the problem stored in the checkpoint.
inline RunConfig config_for(const Checkpoint& ck, const std::string& config_path) {
  RunConfig rc = load_run_config(ck.model.problem, config_path, {});
  check_pair(ck.model, rc);
  return rc;
}

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  Problem problem = Problem::stefan1d;
  std::string config;  // empty: defaults only
  std::string out;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<long long> epochs;
  long long progress_every = 0;  // 0: silent
};

struct TrainOutcome {
  std::string dir;
  FieldMetrics metrics;
  long long epochs = 0;
};

/// Training without exit-code mapping; sweep runs call this directly. On an
/// abort the run directory keeps what was written so far plus error.txt.
inline TrainOutcome run_training(const TrainArgs& a, std::ostream& log) {
  std::vector<std::string> overrides = a.overrides;
  if (a.seed) overrides.push_back("trainer.seed=" + std::to_string(*a.seed));
  if (a.epochs) overrides.push_back("trainer.epochs=" + std::to_string(*a.epochs));
  const RunConfig rc = load_run_config(a.problem, a.config, overrides);
  const std::string dir = resolve_out_dir(a.out, std::string(problem_name(a.problem)) + "_seed" + std::to_string(rc.trainer.seed));
  ensure_dir(dir);
  const std::filesystem::path root(dir);
  std::filesystem::remove(root / "error.txt");
  write_text((root / "resolved.cfg").string(), resolved_config_text(rc));

  const std::string ck_path = (root / "checkpoint.txt").string();
  StefanModel model = make_model(resolve(rc.physics), rc.network, rc.trainer.seed);
  CsvWriter train_log((root / "train_log.csv").string(), train_log_header());
  TrainHooks hooks;
  hooks.on_epoch = [&](const TrainRecord& r) {
    train_log.row(train_log_row(r));
    if (a.progress_every > 0 && (r.epoch + 1) % a.progress_every == 0)
      log << "epoch " << r.epoch + 1 << " loss " << format_double(r.loss.total) << " lr " << format_double(r.lr) << '\n';
  };
  long long last_epoch = 0;
  hooks.on_checkpoint = [&](const StefanModel& m, long long epoch) {
    train_log.flush();
    save_checkpoint(ck_path, m, epoch);
    last_epoch = epoch;
  };
  try {
    train(model, rc.physics, rc.trainer, hooks);
    train_log.flush();
    TrainOutcome out;
    out.dir = dir;
    out.epochs = last_epoch;
    out.metrics = write_eval_outputs(dir, model, rc, checkpoint_id(ck_path, last_epoch));
    return out;
  } catch (const std::exception& e) {
    train_log.flush();
    write_text((root / "error.txt").string(), std::string(e.what()) + "\n");
    throw;
  }
}

inline int cmd_train(const TrainArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    const TrainOutcome r = run_training(a, out);
    out << "wrote " << r.dir << " (temperature r2 " << format_double(r.metrics.temperature.r2) << ")\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// eval / export-field / oracle

inline int cmd_eval(const std::string& checkpoint, const std::string& config, const std::string& out_dir,
                    std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const RunConfig rc = cli_detail::config_for(ck, config);
    const std::string dir = resolve_out_dir(out_dir, "eval");
    ensure_dir(dir);
    const FieldMetrics fm = write_eval_outputs(dir, ck.model, rc, checkpoint_id(checkpoint, ck.epoch));
    out << "wrote " << dir << " (temperature r2 " << format_double(fm.temperature.r2) << ")\n";
    return kExitOk;
  });
}

inline std::string field_file_name(double t) { return "field_t" + format_double(t) + ".csv"; }

/// One CSV per time on the evaluation space grid.
inline void export_field(const StefanModel& m, const RunConfig& rc, double t, const std::string& path) {
  const PhysicsConfig c = resolve(rc.physics);
  const ExactSolution exact(c);
  const double beta = readout_beta(m, c);
  const bool two = c.dim() == 2;
  std::vector<std::string> header = two ? std::vector<std::string>{"x", "y"} : std::vector<std::string>{"x"};
  for (const char* h : {"u_pred", "u_exact", "abs_err", "phi_pred"}) header.push_back(h);
  if (two) header.push_back("phi_exact");
  CsvWriter w(path, header);
  with_fields(m, c, [&](const auto& f, auto n) {
    constexpr std::size_t N = decltype(n)::value;
    for (const auto& x : grid_space(c, rc.eval.grid.space)) {
      const SpaceTime p = make_point(c.dim(), x, t);
      const FieldSample s = sample_fields<N>(f, p, beta);
      const double ue = exact.temperature(p);
      std::vector<std::string> row{cell(x[0])};
      if (two) row.push_back(cell(x[1]));
      row.insert(row.end(), {cell(s.u), cell(ue), cell(std::abs(s.u - ue)), cell(s.phi)});
      if (two) row.push_back(cell(exact.phi(p)));
      w.row(row);
    }
    return 0;
  });
}

inline int cmd_export_field(const std::string& checkpoint, const std::string& config, const std::vector<double>& times,
                            const std::string& out_dir, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    if (times.empty()) throw ConfigError("times", "at least one time is required");
    const Checkpoint ck = load_checkpoint(checkpoint);
    const RunConfig rc = cli_detail::config_for(ck, config);
    for (double t : times)
      if (!(t >= rc.physics.t_start && t <= rc.physics.t_end))
        throw ConfigError("times", "t = " + format_double(t) + " lies outside [" + format_double(rc.physics.t_start) +
                                       ", " + format_double(rc.physics.t_end) + "]");
    const std::string dir = resolve_out_dir(out_dir, "fields");
    ensure_dir(dir);
    for (double t : times) export_field(ck.model, rc, t, (std::filesystem::path(dir) / field_file_name(t)).string());
    out << "wrote " << times.size() << " field file(s) to " << dir << '\n';
    return kExitOk;
  });
}

/// Checkpoint wrapping the analytic solution, usable wherever a trained
/// checkpoint is.
inline int cmd_oracle(Problem p, const std::string& path, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    if (path.empty()) throw ConfigError("out", "an output path is required");
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
    save_checkpoint(path, make_oracle_model(p), 0);
    out << "wrote " << path << '\n';
    return kExitOk;
  });
}

inline int cmd_config(Problem p, const std::string& config, const std::vector<std::string>& overrides,
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    out << resolved_config_text(load_run_config(p, config, overrides));
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  Problem problem = Problem::stefan1d;
  std::string config;
  std::string out;
  std::vector<std::size_t> n_coll;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> overrides;
  std::optional<long long> epochs;
};

struct SweepRun {
  std::size_t n_coll = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  FieldMetrics metrics;
};

inline std::vector<std::string> metric_columns(const char* field) {
  return {std::string(field) + "_mae", std::string(field) + "_mse", std::string(field) + "_rms", std::string(field) + "_r2"};
}

inline std::vector<std::string> metric_cells(const MetricSet& s) { return {cell(s.mae), cell(s.mse), cell(s.rms), cell(s.r2)}; }

inline const char* second_field(Problem p) { return p == Problem::stefan1d ? "interface" : "levelset"; }

inline const MetricSet& second_metrics(Problem p, const FieldMetrics& m) {
  return p == Problem::stefan1d ? m.interface : m.levelset;
}

/// Trains every (n_coll, seed) pair in sequence. Failed runs are recorded
/// in runs.csv and left out of the means in summary.csv.
inline std::vector<SweepRun> run_sweep(const SweepArgs& a, std::ostream& log) {
  if (a.n_coll.empty()) throw ConfigError("n_coll", "list must not be empty");
  if (a.seeds.empty()) throw ConfigError("seeds", "list must not be empty");
  for (std::size_t n : a.n_coll)
    if (n < 1) throw ConfigError("n_coll", "entries must be at least 1");
  // Catch configuration mistakes once instead of in every sub-run.
  load_run_config(a.problem, a.config, a.overrides);
  const std::string dir = resolve_out_dir(a.out, std::string("sweep_") + problem_name(a.problem));
  ensure_dir(dir);
  const std::filesystem::path root(dir);
  const char* f2 = second_field(a.problem);

  std::vector<std::string> run_header{"n_coll", "seed", "status", "error"};
  for (auto& h : metric_columns("temperature")) run_header.push_back(h);
  for (auto& h : metric_columns(f2)) run_header.push_back(h);
  CsvWriter runs_csv((root / "runs.csv").string(), run_header);

  std::vector<SweepRun> runs;
  for (std::size_t n : a.n_coll) {
    for (std::uint64_t seed : a.seeds) {
      SweepRun r;
      r.n_coll = n;
      r.seed = seed;
      TrainArgs t;
      t.problem = a.problem;
      t.config = a.config;
      t.out = (root / ("n" + std::to_string(n) + "_seed" + std::to_string(seed))).string();
      t.overrides = a.overrides;
      t.overrides.push_back("sampler.n_dom=" + std::to_string(n));
      t.seed = seed;
      t.epochs = a.epochs;
      try {
        r.metrics = run_training(t, log).metrics;
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      std::string err = r.error;
      for (char& ch : err)
        if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
      std::vector<std::string> row{cell(n), std::to_string(seed), r.ok ? "ok" : "failed", err};
      const auto add = [&](const MetricSet& s) {
        for (auto& c : r.ok ? metric_cells(s) : std::vector<std::string>(4, "nan")) row.push_back(c);
      };
      add(r.metrics.temperature);
      add(second_metrics(a.problem, r.metrics));
      runs_csv.row(row);
      runs_csv.flush();
      log << "n_coll " << n << " seed " << seed << (r.ok ? " ok" : " failed: " + r.error) << '\n';
      runs.push_back(r);
    }
  }

  std::vector<std::string> sum_header{"n_coll", "runs_ok", "runs_failed"};
  for (auto& h : metric_columns("temperature")) sum_header.push_back(h);
  for (auto& h : metric_columns(f2)) sum_header.push_back(h);
  CsvWriter summary((root / "summary.csv").string(), sum_header);
  for (std::size_t n : a.n_coll) {
    MetricSet t{}, s{};
    std::size_t ok = 0, failed = 0;
    for (const SweepRun& r : runs) {
      if (r.n_coll != n) continue;
      if (!r.ok) {
        ++failed;
        continue;
      }
      ++ok;
      const MetricSet& b = second_metrics(a.problem, r.metrics);
      t.mae += r.metrics.temperature.mae;
      t.mse += r.metrics.temperature.mse;
      t.rms += r.metrics.temperature.rms;
      t.r2 += r.metrics.temperature.r2;
      s.mae += b.mae;
      s.mse += b.mse;
      s.rms += b.rms;
      s.r2 += b.r2;
    }
    std::vector<std::string> row{cell(n), cell(ok), cell(failed)};
    const auto mean = [&](const MetricSet& m) {
      const double k = ok ? static_cast<double>(ok) : std::numeric_limits<double>::quiet_NaN();
      for (auto& c : metric_cells({m.mae / k, m.mse / k, m.rms / k, m.r2 / k, 0})) row.push_back(c);
    };
    mean(t);
    mean(s);
    summary.row(row);
  }
  return runs;
}

inline int cmd_sweep(const SweepArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    const auto runs = run_sweep(a, out);
    std::size_t failed = 0;
    for (const auto& r : runs) failed += r.ok ? 0 : 1;
    if (failed != 0) {
      err << failed << " of " << runs.size() << " sweep runs failed; see runs.csv\n";
      return kExitRuntime;
    }
    return kExitOk;
  });
}

}  // namespace stefan_kan
