// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/experiment.hpp"

using namespace ginar;
namespace fs = std::filesystem;

namespace {

config::ExperimentConfig tiny(const std::string &out) {
  auto cfg = config::parse(R"({
    "dataset": {"synth": {"vars": 6, "steps": 300, "graph_seed": 2, "noise": 0.05}},
    "missing_rate": 0.5,
    "seeds": [0, 1, 2, 3, 4],
    "stride": 6,
    "train": {"epochs": 1, "batch": 16},
    "model": {"embed": 8, "var_embed": 4, "layers": 1, "decoder_hidden": 16},
    "ia": {"k": 3}
  })");
  cfg.output = out;
  return cfg;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string &s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path fresh_dir(const std::string &name) {
  const auto dir = fs::temp_directory_path() / "ginar_experiment_test" / name;
  fs::remove_all(dir);
  return dir;
}

} // namespace

TEST_SUITE("experiment") {

TEST_CASE("a run writes every artifact and reports one row per seed plus the mean") {
  const auto dir = fresh_dir("run");
  const auto report = experiment::run_experiment(tiny(dir.string()));
  CHECK(report.seeds.size() == 5);
  for (const char *f : {"report.csv", "report.json", "history.csv", "snapshot.csv", "snapshot.svg",
                        "checkpoint.json", "seed_3/history.csv"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  const auto csv = slurp(dir / "report.csv");
  CHECK(count_lines(csv) == 1 + 5 + 1);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(count_lines(slurp(dir / "snapshot.csv")) == 1 + 6);

  double mean = 0;
  for (const auto &s : report.seeds)
    mean += s.test.overall.mae;
  CHECK(report.mean.mae == doctest::Approx(mean / 5).epsilon(1e-12));
  const auto &first = report.seeds.front().test;
  double hmean = 0;
  for (const auto &h : first.horizons)
    hmean += h.mae;
  CHECK(first.horizons.size() == 12);
  CHECK(first.overall.mae == doctest::Approx(hmean / 12).epsilon(1e-12));
}

TEST_CASE("identical configurations produce byte-identical reports") {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  auto ca = tiny(a.string()), cb = tiny(b.string());
  ca.seeds = cb.seeds = {7};
  experiment::run_experiment(ca);
  experiment::run_experiment(cb);
  CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
  CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
  CHECK(slurp(a / "snapshot.csv") == slurp(b / "snapshot.csv"));
}

TEST_CASE("evaluating a checkpoint reproduces the training-time test scores") {
  const auto dir = fresh_dir("ckpt");
  auto cfg = tiny(dir.string());
  cfg.seeds = {2};
  const auto trained = experiment::run_experiment(cfg);
  auto eval_cfg = cfg;
  eval_cfg.output = (dir / "eval").string();
  const auto eval = experiment::run_eval(eval_cfg, (dir / "checkpoint.json").string());
  REQUIRE(eval.seeds.size() == 1);
  CHECK(eval.seeds[0].test.overall.mae == trained.seeds[0].test.overall.mae);
  CHECK(eval.seeds[0].test.overall.rmse == trained.seeds[0].test.overall.rmse);
  CHECK(fs::exists(dir / "eval" / "eval_report.csv"));
  CHECK_THROWS_AS(experiment::load_checkpoint((dir / "nope.json").string()), Error);
}

TEST_CASE("snapshot rows carry coordinates, masks and values") {
  auto cfg = tiny("");
  const auto data = experiment::load_data(cfg);
  const auto ctx = experiment::prepare_seed(cfg, data, 0.5, 0);
  std::vector<double> pred(ctx.test.y.size(), 1.25);
  const auto rows = experiment::spatial_snapshot(ctx, data, pred, 0, 3);
  REQUIRE(rows.size() == 6);
  std::size_t masked = 0;
  for (const auto &r : rows) {
    CHECK(r.x.has_value());
    CHECK(r.pred == 1.25);
    CHECK(r.truth == ctx.test.y[(r.var) * 12 + 3]);
    masked += r.masked;
    if (r.masked)
      CHECK(r.input == doctest::Approx(ctx.norm.mean[r.var]));
  }
  CHECK(masked == 3);
  const auto svg = experiment::snapshot_svg(rows);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK_THROWS_AS(experiment::spatial_snapshot(ctx, data, pred, 0, 12), Error);
}

TEST_CASE("seed preparation respects the protocol") {
  auto cfg = tiny("");
  const auto data = experiment::load_data(cfg);
  const auto ctx = experiment::prepare_seed(cfg, data, 0.5, 1);
  CHECK(ctx.mask.indices.size() == 3);
  CHECK(ctx.splits.train.end == 210);
  CHECK(ctx.val.windows() == 30 - 24 + 1);
  CHECK(ctx.test.windows() == 60 - 24 + 1);
  for (std::size_t i = 0; i < 6; ++i)
    if (ctx.missing[i]) {
      CHECK(ctx.norm.mean[i] == 0.0);
      CHECK(ctx.norm.std[i] == 1.0);
    }
  for (Eigen::Index i = 0; i < ctx.a_pre.rows(); ++i)
    CHECK(ctx.a_pre(i, i) >= 1.0);
}

TEST_CASE("ablation and imputation runs report every variant") {
  const auto dir = fresh_dir("ablate");
  auto cfg = tiny(dir.string());
  cfg.seeds = {0, 1};
  const auto reports = experiment::run_ablation(cfg);
  REQUIRE(reports.size() == 4);
  CHECK(reports[0].variant == "ginar");
  CHECK(reports[1].variant == "w/o ia");
  CHECK(fs::exists(dir / "ablation.csv"));
  cfg.rates = {0.25, 0.5};
  const auto rows = experiment::run_impute_eval(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].ia.seeds.size() == 2);
  CHECK(fs::exists(dir / "impute.csv"));
}

} // TEST_SUITE
