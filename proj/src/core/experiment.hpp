// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

// Orchestration: per-seed preparation, training of GinAR and the MLP
// references, multi-seed reports, checkpoints and spatial snapshots.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/data.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/training.hpp"

namespace ginar::experiment {

using Log = std::function<void(const std::string &)>;

struct LoadedData {
  data::TimeSeriesDataset dataset;
  std::optional<Matrix> adjacency;  // raw graph from file or the synthetic ground truth
};

LoadedData load_data(const config::ExperimentConfig &cfg);

/// Everything one (rate, seed) run shares across model variants.
struct SeedContext {
  double rate = 0.0;
  std::uint64_t seed = 0;
  data::MaskSpec mask;
  std::vector<std::uint8_t> missing;
  data::Splits splits;
  data::Normalizer norm;
  data::PreparedSplit train, val, test;
  Matrix a_pre;  // normalized predefined graph
  std::vector<std::string> warnings;
};

/// Raw predefined adjacency for the configured graph kind. Pearson graphs use
/// the training range of normal variables only.
Matrix predefined_adjacency(const config::ExperimentConfig &cfg, const LoadedData &data,
                            const data::Range &train, const data::MaskSpec &mask);

SeedContext prepare_seed(const config::ExperimentConfig &cfg, const LoadedData &data, double rate,
                         std::uint64_t seed);

model::ModelConfig model_config(const config::ExperimentConfig &cfg, double rate, std::size_t vars,
                                std::size_t channels);

enum class Variant { kGinAR, kMlp, kIaMlp };

struct SeedResult {
  std::uint64_t seed = 0;
  data::MaskSpec mask;
  metrics::Breakdown test;
  train::FitResult fit;
};

struct TrainedRun {
  SeedResult result;
  std::unique_ptr<model::Forecaster<float>> model;
  std::vector<double> test_pred;  // [W, N, L] original units
};

/// Builds, fits and scores one model on a prepared seed. GinAR honors the
/// ablation flags in `cfg`.
TrainedRun train_variant(const config::ExperimentConfig &cfg, const SeedContext &ctx,
                         Variant variant, const Log &log = {});

struct MetricsReport {
  std::string variant;
  std::vector<SeedResult> seeds;
  metrics::Scores mean, std;
  metrics::Scores masked_mean, normal_mean;
  std::vector<metrics::Scores> horizon_mean;
};

MetricsReport aggregate(std::string variant, std::vector<SeedResult> seeds);

/// seed,mae,rmse,mape,masked_mae,normal_mae,best_epoch then a "mean" row.
std::string report_csv(const MetricsReport &report);
std::string report_json(const MetricsReport &report, const config::ExperimentConfig &cfg);

/// Trains GinAR for every seed at cfg.missing_rate. Writes report, history,
/// checkpoint and snapshot files under cfg.output unless it is empty.
MetricsReport run_experiment(const config::ExperimentConfig &cfg, const Log &log = {});

/// Full model and the three single-component ablations on identical masks,
/// initial weights and shuffles.
std::vector<MetricsReport> run_ablation(const config::ExperimentConfig &cfg, const Log &log = {});
std::string ablation_csv(const std::vector<MetricsReport> &reports);

struct ImputeRow {
  double rate = 0.0;
  MetricsReport zero_fill, ia;
};

/// Zero-filled MLP against IA+MLP for every configured rate.
std::vector<ImputeRow> run_impute_eval(const config::ExperimentConfig &cfg, const Log &log = {});
/// rate,seed,zero-fill,IA rows (MAE) plus a mean row per rate.
std::string impute_csv(const std::vector<ImputeRow> &rows);

struct SnapshotRow {
  std::size_t var = 0;
  std::optional<double> x, y;
  double input = 0.0, pred = 0.0, truth = 0.0;
  bool masked = false;
};

/// Per-variable values of test window `window` at step `step`.
std::vector<SnapshotRow> spatial_snapshot(const SeedContext &ctx, const LoadedData &data,
                                          std::span<const double> test_pred, std::size_t window,
                                          std::size_t step);
std::string snapshot_csv(const std::vector<SnapshotRow> &rows);
/// Colored points; empty when no row has coordinates.
std::string snapshot_svg(const std::vector<SnapshotRow> &rows);

struct Checkpoint {
  config::ExperimentConfig cfg;
  double rate = 0.0;
  std::uint64_t seed = 0;
  data::MaskSpec mask;
  data::Normalizer norm;
  Matrix a_pre;
  std::unique_ptr<model::GinAR<float>> model;
};

std::string checkpoint_json(const model::GinAR<float> &model, const config::ExperimentConfig &cfg,
                            const SeedContext &ctx);
Checkpoint load_checkpoint(const std::string &path);

/// Test-set scores of a stored checkpoint under its own mask and normalizer.
MetricsReport run_eval(const config::ExperimentConfig &cfg, const std::string &checkpoint_path,
                       const Log &log = {});

void write_text(const std::string &path, const std::string &text);

} // namespace ginar::experiment
