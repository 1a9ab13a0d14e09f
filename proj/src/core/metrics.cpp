// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/metrics.hpp"

#include <cmath>

#include "core/error.hpp"

namespace ginar::metrics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Accumulator {
  double abs = 0, sq = 0, pct = 0;
  std::size_t count = 0, pct_count = 0;

  void add(double p, double y) {
    const double e = p - y;
    abs += std::abs(e);
    sq += e * e;
    ++count;
    if (std::abs(y) > kMapeEpsilon) {
      pct += std::abs(e / y);
      ++pct_count;
    }
  }

  Scores scores() const {
    if (count == 0)
      return {kNaN, kNaN, kNaN};
    const auto n = static_cast<double>(count);
    return {abs / n, std::sqrt(sq / n),
            pct_count ? 100.0 * pct / static_cast<double>(pct_count) : kNaN};
  }
};

double nan_mean(const std::vector<double> &xs) {
  double s = 0;
  std::size_t n = 0;
  for (const double x : xs)
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  return n ? s / static_cast<double>(n) : kNaN;
}

double nan_std(const std::vector<double> &xs) {
  const double mu = nan_mean(xs);
  double s = 0;
  std::size_t n = 0;
  for (const double x : xs)
    if (!std::isnan(x)) {
      s += (x - mu) * (x - mu);
      ++n;
    }
  return n ? std::sqrt(s / static_cast<double>(n)) : kNaN;
}

} // namespace

Scores compute_metrics(std::span<const double> pred, std::span<const double> target) {
  require(pred.size() == target.size(), ErrorCode::kShapeMismatch,
          "compute_metrics: prediction and target sizes differ");
  Accumulator acc;
  for (std::size_t k = 0; k < pred.size(); ++k)
    acc.add(pred[k], target[k]);
  return acc.scores();
}

Breakdown evaluate(std::span<const double> pred, std::span<const double> target,
                   std::size_t windows, std::size_t vars, std::size_t horizon,
                   std::span<const std::uint8_t> missing) {
  const std::size_t total = windows * vars * horizon;
  require(pred.size() == total && target.size() == total, ErrorCode::kShapeMismatch,
          "evaluate: arrays do not match [W, N, L]");
  require(missing.empty() || missing.size() == vars, ErrorCode::kShapeMismatch,
          "evaluate: mask length differs from N");
  std::vector<Accumulator> per_h(horizon), per_var(vars);
  Accumulator masked, normal;
  for (std::size_t w = 0; w < windows; ++w)
    for (std::size_t i = 0; i < vars; ++i)
      for (std::size_t l = 0; l < horizon; ++l) {
        const std::size_t k = (w * vars + i) * horizon + l;
        per_h[l].add(pred[k], target[k]);
        per_var[i].add(pred[k], target[k]);
        (!missing.empty() && missing[i] ? masked : normal).add(pred[k], target[k]);
      }
  Breakdown b;
  std::vector<double> mae, rmse, mape;
  for (const auto &acc : per_h) {
    b.horizons.push_back(acc.scores());
    mae.push_back(b.horizons.back().mae);
    rmse.push_back(b.horizons.back().rmse);
    mape.push_back(b.horizons.back().mape);
  }
  b.overall = {nan_mean(mae), nan_mean(rmse), nan_mean(mape)};
  b.masked = masked.scores();
  b.normal = normal.scores();
  for (const auto &acc : per_var)
    b.variable_mae.push_back(acc.scores().mae);
  return b;
}

Scores mean_scores(std::span<const Scores> runs) {
  std::vector<double> mae, rmse, mape;
  for (const auto &s : runs) {
    mae.push_back(s.mae);
    rmse.push_back(s.rmse);
    mape.push_back(s.mape);
  }
  return {nan_mean(mae), nan_mean(rmse), nan_mean(mape)};
}

Scores std_scores(std::span<const Scores> runs) {
  std::vector<double> mae, rmse, mape;
  for (const auto &s : runs) {
    mae.push_back(s.mae);
    rmse.push_back(s.rmse);
    mape.push_back(s.mape);
  }
  return {nan_std(mae), nan_std(rmse), nan_std(mape)};
}

} // namespace ginar::metrics
