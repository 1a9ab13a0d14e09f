// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

// ginar: command-line front end over the C interface.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ginar/ginar.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string checkpoint;
  std::vector<std::uint64_t> seeds;
  double rate = -1.0;
  bool no_ia = false, no_pg = false, no_ag = false;
  bool quiet = false;
  // synth
  std::size_t vars = 20, steps = 2000;
  std::uint64_t graph_seed = 7;
  double noise = 0.05;
};

int report_failure(const char *what) {
  std::fprintf(stderr, "ginar: %s: %s\n", what, ginar_last_error());
  return 1;
}

void print_line(const char *line, void *) { std::fprintf(stderr, "%s\n", line); }

class Config {
 public:
  ~Config() { ginar_config_free(cfg_); }
  ginar_config *get() const { return cfg_; }

  bool open(const Options &o) {
    if (ginar_config_load(o.config.c_str(), &cfg_) != GINAR_OK)
      return false;
    if (o.rate >= 0 && ginar_config_set_rate(cfg_, o.rate) != GINAR_OK)
      return false;
    if (!o.seeds.empty() && ginar_config_set_seeds(cfg_, o.seeds.data(), o.seeds.size()) != GINAR_OK)
      return false;
    if ((o.no_ia || o.no_pg || o.no_ag) &&
        ginar_config_set_ablation(cfg_, !o.no_ia, !o.no_pg, !o.no_ag) != GINAR_OK)
      return false;
    if (!o.out.empty() && ginar_config_set_output(cfg_, o.out.c_str()) != GINAR_OK)
      return false;
    if (!o.quiet)
      ginar_config_set_log(cfg_, print_line, nullptr);
    return true;
  }

 private:
  ginar_config *cfg_ = nullptr;
};

int finish(ginar_status status, ginar_report *report, const char *what) {
  if (status != GINAR_OK)
    return report_failure(what);
  char *csv = nullptr;
  if (ginar_report_csv(report, &csv) == GINAR_OK) {
    std::fputs(csv, stdout);
    ginar_string_free(csv);
  }
  ginar_report_free(report);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"GinAR multivariate forecasting with missing variables"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("--config", o.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--rate", o.rate, "Missing-variable rate in [0, 1)");
    cmd->add_option("--seeds", o.seeds, "Seeds to run")->delimiter(',');
    cmd->add_flag("--no-ia", o.no_ia, "Remove interpolation attention");
    cmd->add_flag("--no-pg", o.no_pg, "Remove the predefined graph");
    cmd->add_flag("--no-ag", o.no_ag, "Remove the adaptive graph");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress lines");
  };

  auto *train = app.add_subcommand("train", "Train GinAR for every seed and write reports");
  add_common(train);
  auto *eval = app.add_subcommand("eval", "Score a checkpoint on its test split");
  add_common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint.json from a training run")
      ->required()
      ->check(CLI::ExistingFile);
  auto *ablate = app.add_subcommand("ablate", "Compare GinAR against w/o ia, w/o pg and w/o ag");
  add_common(ablate);
  auto *impute = app.add_subcommand("impute-eval", "Zero-fill MLP against IA+MLP");
  add_common(impute);

  auto *synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("--vars", o.vars, "Number of variables")->check(CLI::Range(4, 100000));
  synth->add_option("--steps", o.steps, "Number of time steps");
  synth->add_option("--graph-seed", o.graph_seed, "Generator seed");
  synth->add_option("--noise", o.noise, "Observation noise standard deviation");
  synth->add_option("--out", o.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    if (ginar_synth(o.vars, o.steps, o.graph_seed, o.noise, o.out.c_str()) != GINAR_OK)
      return report_failure("synth");
    std::printf("wrote %s/{data,distances,coords,adjacency}.csv\n", o.out.c_str());
    return 0;
  }

  Config cfg;
  if (!cfg.open(o))
    return report_failure("config");
  ginar_report *report = nullptr;
  ginar_status status;
  const char *what;
  if (train->parsed()) {
    status = ginar_train(cfg.get(), &report);
    what = "train";
  } else if (eval->parsed()) {
    status = ginar_eval(cfg.get(), o.checkpoint.c_str(), &report);
    what = "eval";
  } else if (ablate->parsed()) {
    status = ginar_ablate(cfg.get(), &report);
    what = "ablate";
  } else {
    status = ginar_impute_eval(cfg.get(), &report);
    what = "impute-eval";
  }
  return finish(status, report, what);
}
