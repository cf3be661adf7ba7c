// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0

// stefan_kan: train, evaluate and export KAN solutions of Stefan problems.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "stefan_kan/cli.hpp"

namespace sk = stefan_kan;

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed KAN solver for two-phase Stefan problems"};
  app.require_subcommand(1);
  const std::map<std::string, sk::Problem> problems{{"stefan1d", sk::Problem::stefan1d}, {"stefan2d", sk::Problem::stefan2d}};

  sk::TrainArgs train;
  std::uint64_t seed = 0;
  long long epochs = 0;
  auto* t = app.add_subcommand("train", "Train a model and write a run directory");
  t->add_option("problem", train.problem, "stefan1d or stefan2d")->required()->transform(CLI::CheckedTransformer(problems));
  t->add_option("--config", train.config, "Config file (key = value lines)");
  t->add_option("--out", train.out, "Run directory (default: $STEFAN_KAN_OUT/<problem>_seed<seed>)");
  t->add_option("--set", train.overrides, "Override one key (key=value); repeatable");
  auto* seed_opt = t->add_option("--seed", seed, "Shortcut for --set trainer.seed=N");
  auto* epochs_opt = t->add_option("--epochs", epochs, "Shortcut for --set trainer.epochs=N");
  t->add_option("--progress", train.progress_every, "Print the loss every N epochs (0: quiet)");

  std::string checkpoint, config, out;
  auto* e = app.add_subcommand("eval", "Recompute metrics and interface CSVs for a checkpoint");
  e->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  e->add_option("--config", config, "Config file (a run's resolved.cfg)");
  e->add_option("--out", out, "Output directory (default: $STEFAN_KAN_OUT/eval)");

  std::vector<double> times;
  auto* x = app.add_subcommand("export-field", "Write field CSVs on the evaluation grid");
  x->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  x->add_option("--config", config, "Config file (a run's resolved.cfg)");
  x->add_option("--times", times, "Comma-separated times")->required()->delimiter(',');
  x->add_option("--out", out, "Output directory (default: $STEFAN_KAN_OUT/fields)");

  sk::SweepArgs sweep;
  long long sweep_epochs = 0;
  auto* s = app.add_subcommand("sweep", "Train over collocation counts and seeds, then summarize");
  s->add_option("problem", sweep.problem, "stefan1d or stefan2d")->required()->transform(CLI::CheckedTransformer(problems));
  s->add_option("--config", sweep.config, "Config file");
  s->add_option("--n-coll", sweep.n_coll, "Comma-separated domain batch sizes")->required()->delimiter(',');
  s->add_option("--seeds", sweep.seeds, "Comma-separated seeds")->required()->delimiter(',');
  s->add_option("--set", sweep.overrides, "Override one key (key=value); repeatable");
  auto* sweep_epochs_opt = s->add_option("--epochs", sweep_epochs, "Shortcut for --set trainer.epochs=N");
  s->add_option("--out", sweep.out, "Sweep directory (default: $STEFAN_KAN_OUT/sweep_<problem>)");

  sk::Problem oracle_problem = sk::Problem::stefan1d;
  std::string oracle_out;
  auto* o = app.add_subcommand("oracle", "Write a checkpoint that wraps the analytic solution");
  o->add_option("problem", oracle_problem, "stefan1d or stefan2d")->required()->transform(CLI::CheckedTransformer(problems));
  o->add_option("--out", oracle_out, "Checkpoint path")->required();

  sk::Problem config_problem = sk::Problem::stefan1d;
  std::vector<std::string> config_overrides;
  auto* c = app.add_subcommand("config", "Print the resolved configuration");
  c->add_option("problem", config_problem, "stefan1d or stefan2d")->required()->transform(CLI::CheckedTransformer(problems));
  c->add_option("--config", config, "Config file");
  c->add_option("--set", config_overrides, "Override one key (key=value); repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? sk::kExitOk : sk::kExitConfig;
  }

  if (t->parsed()) {
    if (*seed_opt) train.seed = seed;
    if (*epochs_opt) train.epochs = epochs;
    return sk::cmd_train(train);
  }
  if (e->parsed()) return sk::cmd_eval(checkpoint, config, out);
  if (x->parsed()) return sk::cmd_export_field(checkpoint, config, times, out);
  if (s->parsed()) {
    if (*sweep_epochs_opt) sweep.epochs = sweep_epochs;
    return sk::cmd_sweep(sweep);
  }
  if (o->parsed()) return sk::cmd_oracle(oracle_problem, oracle_out);
  return sk::cmd_config(config_problem, config, config_overrides);
}
