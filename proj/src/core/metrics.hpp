// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace ginar::metrics {

inline constexpr double kMapeEpsilon = 1e-4;

/// MAPE is NaN when every target is within kMapeEpsilon of zero.
struct Scores {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = std::numeric_limits<double>::quiet_NaN();
};

/// Pointwise scores over two equally sized arrays of original-unit values.
Scores compute_metrics(std::span<const double> pred, std::span<const double> target);

/// Forecast scores on [W, N, L] arrays.
struct Breakdown {
  Scores overall;                 // mean over horizons of per-horizon scores
  std::vector<Scores> horizons;   // one per step
  Scores masked;                  // variables flagged missing (NaN fields when none)
  Scores normal;
  std::vector<double> variable_mae;
};

Breakdown evaluate(std::span<const double> pred, std::span<const double> target,
                   std::size_t windows, std::size_t vars, std::size_t horizon,
                   std::span<const std::uint8_t> missing);

/// Field-wise mean over runs; NaN fields are skipped, all-NaN stays NaN.
Scores mean_scores(std::span<const Scores> runs);
Scores std_scores(std::span<const Scores> runs);

} // namespace ginar::metrics
