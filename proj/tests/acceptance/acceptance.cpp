// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

// Acceptance checks. Usage: ginar_acceptance <criterion 1-8 | all>
// Each criterion prints progress lines followed by exactly one line
//   CRITERION <n>: PASS|FAIL <summary>
// and the process exits non-zero if any requested criterion failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "common/gradcases.hpp"
#include "common/oracle.hpp"
#include "core/experiment.hpp"

using namespace ginar;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string summary;
};

std::string fmt(const char *f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char *f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Shared desk-scale protocol: 20 variables, 2000 steps, five seeds. Training
// windows are subsampled and the epoch budget is short so the whole suite
// runs on one CPU core; evaluation always uses every test window.
constexpr std::size_t kStride = 3;
constexpr std::size_t kEpochs = 12;

config::ExperimentConfig synthetic_protocol(double rate) {
  config::ExperimentConfig cfg;
  cfg.dataset.synth = config::SynthSpec{};
  cfg.dataset.synth->vars = 20;
  cfg.dataset.synth->steps = 2000;
  cfg.missing_rate = rate;
  cfg.seeds = {0, 1, 2, 3, 4};
  cfg.stride = kStride;
  cfg.train.epochs = kEpochs;
  cfg.output.clear();
  cfg.validate();
  return cfg;
}

void progress(const std::string &line) {
  std::printf("  %s\n", line.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------- 1

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  constexpr std::uint64_t kInstances = 20;
  double worst = 0;
  std::string worst_name;
  std::size_t checks = 0, failed = 0;
  std::map<std::string, double> per_name;
  for (std::uint64_t seed = 0; seed < kInstances; ++seed) {
    auto cases = gradcases::primitive_cases(seed);
    cases.push_back(gradcases::model_case(seed));
    for (auto &c : cases) {
      // A 1e-6 step keeps the central difference from straddling ReLU kinks
      // in the composed model; truncation error stays far below tolerance.
      const auto r = ad::grad_check(c.loss, c.params, 1e-6, 1e-4);
      ++checks;
      failed += !r.passed;
      per_name[c.name] = std::max(per_name[c.name], r.max_rel_error);
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_name = c.name;
      }
    }
  }
  for (const auto &[name, err] : per_name)
    progress(fmt("%-28s max rel error %.3e", name.c_str(), err));
  const double elapsed = seconds_since(t0);
  const bool pass = failed == 0 && worst <= 1e-4 && elapsed < 120.0;
  return {pass, fmt("%zu grad checks over %zu kinds x %llu instances, %zu failed, worst %.3e (%s), %.1f s",
                    checks, per_name.size(), static_cast<unsigned long long>(kInstances), failed, worst,
                    worst_name.c_str(), elapsed)};
}

// ---------------------------------------------------------------- 2

Matrix random_graph(std::size_t n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      a(i, j) = a(j, i) = u(rng) < 0.5 ? u(rng) : 0.0;
  return graph::normalize_predefined(a);
}

oracle::Mat to_mat(const Matrix &m) {
  oracle::Mat o(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  std::copy(m.data(), m.data() + m.size(), o.v.begin());
  return o;
}

std::vector<std::uint8_t> random_mask(std::size_t n, std::mt19937_64 &rng) {
  std::uniform_int_distribution<std::size_t> count(1, n - 1);
  const auto mask = data::gen_mask(n, static_cast<double>(count(rng)) / static_cast<double>(n), rng());
  return mask.flags(n);
}

model::ModelConfig random_model_config(std::mt19937_64 &rng, std::size_t n) {
  model::ModelConfig cfg;
  cfg.num_vars = n;
  cfg.in_channels = 1 + rng() % 2;
  cfg.embed = 3 + rng() % 4;
  cfg.var_embed = 2 + rng() % 3;
  cfg.layers = 1 + rng() % 3;
  cfg.history = 2 + rng() % 4;
  cfg.horizon = 1 + rng() % 4;
  cfg.decoder_hidden = 4 + rng() % 5;
  cfg.dropout = 0.0;
  cfg.ia.k = 1 + rng() % (n - 1);
  cfg.ia.pairwise_scores = rng() % 2;
  return cfg;
}

Outcome oracle_equivalence() {
  constexpr int kInstances = 12;
  double err_cell = 0, err_ia = 0, err_agcn = 0, err_fwd = 0;
  for (int inst = 0; inst < kInstances; ++inst) {
    std::mt19937_64 rng(1000 + inst);
    const std::size_t n = 4 + rng() % 5;
    const auto cfg = random_model_config(rng, n);
    const auto missing = random_mask(n, rng);
    const Matrix a_pre = random_graph(n, rng);
    const oracle::Mat a_pre_m = to_mat(a_pre);
    model::GinAR<double> m(cfg, rng());
    m.set_predefined_graph(a_pre);
    m.set_missing(missing);
    const auto &layer = m.layers()[0];
    const std::size_t c = cfg.in_channels, w = cfg.embed;

    // apply_ia
    {
      auto xv = oracle::random_vec(n * c, rng);
      oracle::Mat xm(n, c);
      xm.v = xv;
      const auto y = ia::apply_ia(layer.ia, ad::Tensor<double>::constant({n, c}, xv), missing, cfg.ia);
      err_ia = std::max(err_ia, oracle::max_abs_diff(oracle::apply_ia(oracle::ia_params(layer.ia), xm,
                                                                      missing, cfg.ia), y));
    }
    // agcn_apply
    {
      auto xv = oracle::random_vec(n * w, rng);
      oracle::Mat xm(n, w);
      xm.v = xv;
      auto av = oracle::random_vec(n * n, rng);
      oracle::Mat am(n, n);
      am.v = av;
      const auto y = model::agcn_apply(ad::Tensor<double>::constant({n, w}, xv), graph::to_tensor<double>(a_pre),
                                       ad::Tensor<double>::constant({n, n}, av), layer.reset);
      err_agcn = std::max(err_agcn, oracle::max_abs_diff(
                                        oracle::agcn(xm, &a_pre_m, &am, oracle::gate_params(layer.reset), 1e-5),
                                        y));
    }
    // cell_step
    {
      auto xv = oracle::random_vec(n * c, rng);
      auto cv = oracle::random_vec(n * w, rng, 0.5);
      oracle::Mat xm(n, c), cm(n, w);
      xm.v = xv;
      cm.v = cv;
      model::CellContext<double> ctx;
      ctx.config = &m.config();
      ctx.a_pre = graph::to_tensor<double>(a_pre);
      ctx.missing = missing;
      const auto [h, cell] = model::cell_step(layer, ad::Tensor<double>::constant({n, c}, xv),
                                              ad::Tensor<double>::constant({n, w}, cv), ctx);
      const auto ref = oracle::cell(oracle::layer_params(layer), xm, cm, &a_pre_m, missing, cfg);
      err_cell = std::max({err_cell, oracle::max_abs_diff(ref.h, h), oracle::max_abs_diff(ref.c, cell)});
    }
    // full forward
    {
      const std::size_t batch = 2;
      model::InputBatch in{batch, n, cfg.history, c, oracle::random_vec(batch * n * cfg.history * c, rng)};
      std::mt19937_64 unused(0);
      const auto y = m.forward(in, false, unused);
      for (std::size_t b = 0; b < batch; ++b)
        err_fwd = std::max(err_fwd, oracle::max_abs_diff(oracle::forward(m, a_pre_m, in, b), y,
                                                         b * n * cfg.horizon));
    }
  }
  progress(fmt("apply_ia   max |diff| %.3e", err_ia));
  progress(fmt("agcn_apply max |diff| %.3e", err_agcn));
  progress(fmt("cell_step  max |diff| %.3e", err_cell));
  progress(fmt("forward    max |diff| %.3e", err_fwd));
  const double worst = std::max({err_ia, err_agcn, err_cell, err_fwd});
  return {worst <= 1e-6, fmt("%d random instances per function, worst |diff| %.3e (tolerance 1e-6)",
                             kInstances, worst)};
}

// ---------------------------------------------------------------- 3

Outcome structural_values() {
  bool ok = true;
  std::vector<std::string> notes;
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const Matrix norm = graph::normalize_predefined(a);
  const bool norm_exact = norm(0, 0) == 1.0 && norm(0, 1) == 1.0 && norm(1, 0) == 1.0 && norm(1, 1) == 1.0;
  ok = ok && norm_exact;
  notes.push_back(norm_exact ? "normalize exact" : "normalize WRONG");

  double worst_ia = 0, worst_adap = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 3 + seed % 20;
    auto ia_state = ia::IAState<float>::init(n, 2, 8, 4, rng);
    const auto a_ia = ia::build_correspondence(ia_state);
    auto ag = graph::AdaptiveGraphState<float>::init(n, 8, 4, rng);
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> xv(2 * n * 8);
    for (float &x : xv)
      x = g(rng);
    const auto a_adap = graph::adaptive_adjacency(graph::fuse_embedding(ad::Tensor<float>::constant({2, n, 8}, xv), ag));
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j)
        s += a_ia.data()[r * n + j];
      worst_ia = std::max(worst_ia, std::abs(s - 2.0));
    }
    for (std::size_t r = 0; r < 2 * n; ++r) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j)
        s += a_adap.data()[r * n + j];
      worst_adap = std::max(worst_adap, std::abs(s - 2.0));
    }
  }
  ok = ok && worst_ia <= 1e-5 && worst_adap <= 1e-5;
  notes.push_back(fmt("A_IA row-sum dev %.2e, A_adap row-sum dev %.2e", worst_ia, worst_adap));

  const train::TrainConfig tc;
  const bool lr_exact = train::lr_at_epoch(tc, 0) == 0.006 && train::lr_at_epoch(tc, 1) == 0.003 &&
                        train::lr_at_epoch(tc, 95) == 1.875e-4;
  ok = ok && lr_exact;
  notes.push_back(fmt("lr {0:%.6g, 1:%.6g, 95:%.6g}", train::lr_at_epoch(tc, 0), train::lr_at_epoch(tc, 1),
                      train::lr_at_epoch(tc, 95)));
  std::string summary;
  for (std::size_t k = 0; k < notes.size(); ++k)
    summary += (k ? "; " : "") + notes[k];
  return {ok, summary};
}

// ---------------------------------------------------------------- training criteria

struct RunSummary {
  double mae = 0;
  bool finite = true;
};

RunSummary run_variant(const config::ExperimentConfig &cfg, const experiment::SeedContext &ctx,
                       experiment::Variant variant, const char *label) {
  const auto t0 = Clock::now();
  const auto run = experiment::train_variant(cfg, ctx, variant);
  RunSummary s;
  s.mae = run.result.test.overall.mae;
  s.finite = std::all_of(run.test_pred.begin(), run.test_pred.end(), [](double v) { return std::isfinite(v); });
  s.finite = s.finite && run.test_pred.size() == ctx.test.windows() * ctx.test.vars * ctx.test.horizon;
  progress(fmt("rate %.2f seed %llu %-10s test MAE %.5f (masked %.5f, normal %.5f) best epoch %ld, %.1f s",
               ctx.rate, static_cast<unsigned long long>(ctx.seed), label, s.mae, run.result.test.masked.mae,
               run.result.test.normal.mae, run.result.fit.best_epoch, seconds_since(t0)));
  return s;
}

Outcome beats_missing_blind_mlp() {
  const auto t0 = Clock::now();
  const auto cfg = synthetic_protocol(0.5);
  const auto data = experiment::load_data(cfg);
  std::vector<double> ginar_mae, mlp_mae, ratios;
  for (const auto seed : cfg.seeds) {
    const auto ctx = experiment::prepare_seed(cfg, data, 0.5, seed);
    ginar_mae.push_back(run_variant(cfg, ctx, experiment::Variant::kGinAR, "ginar").mae);
    mlp_mae.push_back(run_variant(cfg, ctx, experiment::Variant::kMlp, "mlp").mae);
    ratios.push_back(ginar_mae.back() / mlp_mae.back());
  }
  const double g = median(ginar_mae), m = median(mlp_mae);
  const double elapsed = seconds_since(t0);
  const bool pass = g <= 0.8 * m && elapsed < 900.0;
  return {pass, fmt("median MAE GinAR %.5f vs zero-fill MLP %.5f (ratio %.3f, bar 0.8; per-seed ratios %.3f..%.3f), %.0f s",
                    g, m, g / m, *std::min_element(ratios.begin(), ratios.end()),
                    *std::max_element(ratios.begin(), ratios.end()), elapsed)};
}

Outcome ablation_direction() {
  auto cfg = synthetic_protocol(0.75);
  auto no_ia = cfg;
  no_ia.ablation.ia = false;
  const auto data = experiment::load_data(cfg);
  int wins = 0;
  std::vector<double> full_mae, no_ia_mae;
  for (const auto seed : cfg.seeds) {
    const auto ctx = experiment::prepare_seed(cfg, data, 0.75, seed);
    full_mae.push_back(run_variant(cfg, ctx, experiment::Variant::kGinAR, "ginar").mae);
    no_ia_mae.push_back(run_variant(no_ia, ctx, experiment::Variant::kGinAR, "w/o ia").mae);
    wins += full_mae.back() < no_ia_mae.back();
  }
  return {wins >= 4, fmt("full < w/o ia in %d of 5 paired seeds (need 4); median %.5f vs %.5f", wins,
                         median(full_mae), median(no_ia_mae))};
}

Outcome graceful_degradation() {
  const std::vector<double> rates{0.25, 0.5, 0.75, 0.9};
  std::vector<double> medians;
  bool finite = true;
  const auto base = synthetic_protocol(0.25);
  const auto data = experiment::load_data(base);
  for (const double rate : rates) {
    const auto cfg = synthetic_protocol(rate);
    std::vector<double> maes;
    for (const auto seed : cfg.seeds) {
      const auto ctx = experiment::prepare_seed(cfg, data, rate, seed);
      const auto s = run_variant(cfg, ctx, experiment::Variant::kGinAR, "ginar");
      maes.push_back(s.mae);
      finite = finite && s.finite && std::isfinite(s.mae);
    }
    medians.push_back(median(maes));
    progress(fmt("rate %.2f median MAE %.5f", rate, medians.back()));
  }
  bool monotone = true;
  for (std::size_t k = 1; k < medians.size(); ++k)
    monotone = monotone && medians[k] >= medians[k - 1];
  const bool bounded = medians.back() <= 1.5 * medians.front();
  return {monotone && bounded && finite,
          fmt("median MAE 25/50/75/90%% = %.5f/%.5f/%.5f/%.5f, non-decreasing %s, MAE90/MAE25 %.3f (bar 1.5), "
              "all predictions finite %s",
              medians[0], medians[1], medians[2], medians[3], monotone ? "yes" : "no",
              medians[3] / medians[0], finite ? "yes" : "no")};
}

Outcome imputation_helps() {
  auto cfg = synthetic_protocol(0.5);
  cfg.rates = {0.5};
  const auto rows = experiment::run_impute_eval(cfg, progress);
  const auto &row = rows.front();
  int wins = 0;
  for (std::size_t k = 0; k < row.ia.seeds.size(); ++k) {
    const double zf = row.zero_fill.seeds[k].test.overall.mae, ia = row.ia.seeds[k].test.overall.mae;
    progress(fmt("seed %llu zero-fill MLP %.5f  IA+MLP %.5f", static_cast<unsigned long long>(row.ia.seeds[k].seed),
                 zf, ia));
    wins += ia < zf;
  }
  return {wins >= 4, fmt("IA+MLP < zero-fill MLP in %d of %zu paired seeds (need 4); mean %.5f vs %.5f", wins,
                         row.ia.seeds.size(), row.ia.mean.mae, row.zero_fill.mean.mae)};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism_and_protocol() {
  auto cfg = synthetic_protocol(0.5);
  cfg.seeds = {0, 1};
  cfg.train.epochs = 2;
  cfg.stride = 6;
  const fs::path dir = fs::temp_directory_path() / "ginar_acceptance_determinism";
  fs::remove_all(dir);
  cfg.output = dir.string();
  const std::vector<std::string> files{"report.csv", "report.json", "history.csv", "snapshot.csv",
                                       "checkpoint.json", "seed_1/history.csv"};

  const auto first = experiment::run_experiment(cfg);
  std::map<std::string, std::string> before;
  for (const auto &f : files)
    before[f] = slurp(dir / f);
  fs::remove_all(dir);
  const auto second = experiment::run_experiment(cfg);
  std::size_t identical = 0;
  for (const auto &f : files)
    identical += !before[f].empty() && before[f] == slurp(dir / f);
  bool same_memory = first.seeds.size() == second.seeds.size();
  for (std::size_t k = 0; same_memory && k < first.seeds.size(); ++k)
    same_memory = first.seeds[k].test.overall.mae == second.seeds[k].test.overall.mae &&
                  first.seeds[k].test.overall.rmse == second.seeds[k].test.overall.rmse;

  // Headline = mean over seeds of the mean over 12 horizons.
  double headline = 0;
  bool twelve = true;
  for (const auto &s : first.seeds) {
    twelve = twelve && s.test.horizons.size() == 12;
    double h = 0;
    for (const auto &sc : s.test.horizons)
      h += sc.mae;
    headline += h / static_cast<double>(s.test.horizons.size());
  }
  headline /= static_cast<double>(first.seeds.size());
  const bool headline_ok = twelve && std::abs(headline - first.mean.mae) <= 1e-12 * std::max(1.0, headline);

  // The five-seed default.
  const bool five_seeds = config::ExperimentConfig{}.seeds.size() == 5;
  const bool pass = identical == files.size() && same_memory && headline_ok && five_seeds;
  return {pass, fmt("%zu/%zu artifacts byte-identical across reruns, in-memory scores identical %s, headline "
                    "= seed mean of 12-horizon mean %s (%.6f), default seeds %zu",
                    identical, files.size(), same_memory ? "yes" : "no", headline_ok ? "yes" : "no", headline,
                    config::ExperimentConfig{}.seeds.size())};
}

} // namespace

int main(int argc, char **argv) {
  const std::string which = argc > 1 ? argv[1] : "all";
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, gradient_correctness},    {2, oracle_equivalence}, {3, structural_values},
      {4, beats_missing_blind_mlp}, {5, ablation_direction}, {6, graceful_degradation},
      {7, imputation_helps},        {8, determinism_and_protocol},
  };
  bool any = false, all_pass = true;
  for (const auto &[id, fn] : criteria) {
    if (which != "all" && which != std::to_string(id))
      continue;
    any = true;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("CRITERION %d: %s %s\n", id, o.pass ? "PASS" : "FAIL", o.summary.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  if (!any) {
    std::fprintf(stderr, "usage: %s <1-8|all>\n", argv[0]);
    return 2;
  }
  return all_pass ? 0 : 1;
}
