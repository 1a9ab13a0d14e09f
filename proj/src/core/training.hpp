// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/data.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"

namespace ginar::train {

struct TrainConfig {
  double lr0 = 0.006;
  std::vector<std::size_t> milestones{1, 15, 40, 70, 90};
  double gamma = 0.5;
  double clip_norm = 5.0;
  std::size_t batch = 16;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// lr0 * gamma^(number of milestones <= epoch).
double lr_at_epoch(const TrainConfig &cfg, std::size_t epoch);

/// Scales all gradients uniformly so their global L2 norm is at most
/// `max_norm`. Returns the factor applied (1 when untouched).
template <typename Real> double clip_gradients(const model::ParamList<Real> &params, double max_norm);

template <typename Real> class Adam {
 public:
  explicit Adam(const model::ParamList<Real> &params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  /// One bias-corrected update; parameters without a gradient count as zero.
  void step(model::ParamList<Real> &params, double lr);
  std::uint64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Mean absolute error over every entry; shapes must match.
template <typename Real>
ad::Tensor<Real> l1_loss(const ad::Tensor<Real> &pred, const ad::Tensor<Real> &target);

/// Maps normalized [B, N, L] outputs back to original units.
template <typename Real>
ad::Tensor<Real> denormalize(const ad::Tensor<Real> &pred, const data::Normalizer &norm);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  metrics::Scores val;
};

struct TrainData {
  const data::PreparedSplit *train = nullptr;
  const data::PreparedSplit *val = nullptr;
  const data::Normalizer *norm = nullptr;
  std::vector<std::uint8_t> missing;
};

/// Original-unit forecasts [W, N, L] for every window of `split`.
template <typename Real>
std::vector<double> predict(model::Forecaster<Real> &model, const data::PreparedSplit &split,
                            const data::Normalizer &norm, std::size_t batch = 64);

/// One pass over shuffled training windows followed by validation scoring.
template <typename Real>
EpochRecord train_epoch(model::Forecaster<Real> &model, Adam<Real> &opt, const TrainData &data,
                        const TrainConfig &cfg, std::size_t epoch);

struct FitResult {
  std::vector<EpochRecord> history;
  long best_epoch = -1;  // -1: no epoch ran, the initial model is kept
  double best_val_mae = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

/// Runs cfg.epochs epochs and leaves the model holding the parameters of the
/// epoch with the lowest validation MAE.
template <typename Real>
FitResult fit(model::Forecaster<Real> &model, const TrainData &data, const TrainConfig &cfg,
              const EpochCallback &on_epoch = {});

/// epoch,lr,train_loss,val_mae,val_rmse,val_mape
std::string history_csv(const std::vector<EpochRecord> &history);

} // namespace ginar::train
