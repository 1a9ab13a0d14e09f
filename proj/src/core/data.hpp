// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/model.hpp"

namespace ginar::data {

struct TimeSeriesDataset {
  Matrix values;                  // N x T
  double granularity = 300.0;     // seconds per step
  std::vector<std::string> ids;
  std::optional<Matrix> coords;     // N x 2
  std::optional<Matrix> distances;  // N x N

  std::size_t vars() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t steps() const { return static_cast<std::size_t>(values.cols()); }
};

/// CSV with a header row of variable ids and one row per time step.
TimeSeriesDataset load_dataset(const std::string &path);
void save_dataset(const TimeSeriesDataset &ds, const std::string &path);

/// Numeric CSV; `header` skips the first line.
Matrix load_matrix_csv(const std::string &path, bool header);
void save_matrix_csv(const Matrix &m, const std::string &path,
                     const std::vector<std::string> &header = {});

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct Splits {
  Range train, val, test;
};

/// Chronological, contiguous train/val/test ranges. Every range must hold
/// at least `min_length` steps.
Splits split(std::size_t steps, std::array<double, 3> ratios, std::size_t min_length);

struct MaskSpec {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> indices;  // sorted

  std::vector<std::uint8_t> flags(std::size_t n) const;
  std::string to_json() const;
  static MaskSpec from_json(const std::string &text);
};

/// round(rate * N) distinct variables drawn without replacement from a
/// generator seeded by `seed`. At least one variable always stays normal;
/// `warning` is set when the count had to be clamped.
MaskSpec gen_mask(std::size_t n, double rate, std::uint64_t seed, std::string *warning = nullptr);

/// Per-variable z-score statistics fitted on the training range of normal
/// variables. Missing variables keep mean 0 and std 1.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;

  static Normalizer fit(const Matrix &train_values, std::span<const std::uint8_t> missing,
                        std::vector<std::string> *warnings = nullptr);
  Matrix apply(const Matrix &values) const;
  Matrix invert(const Matrix &values) const;
};

struct Window {
  std::size_t start = 0;
  Matrix x;  // N x H
  Matrix y;  // N x L
};

/// Window t covers x = values[:, t:t+H], y = values[:, t+H:t+H+L].
std::vector<Window> make_windows(const Matrix &values, std::size_t history, std::size_t horizon,
                                 std::size_t stride = 1);

/// Sets the history rows of masked variables to exactly zero; targets stay.
void apply_mask(std::vector<Window> &windows, const MaskSpec &mask);

struct ChannelOptions {
  bool time_of_day = false;
  std::size_t steps_per_day = 288;
};

/// Model-ready windows of one split: inputs normalized and masked, targets
/// in original units.
struct PreparedSplit {
  std::size_t vars = 0, history = 0, horizon = 0, channels = 1;
  std::vector<std::size_t> starts;
  std::vector<double> x;  // [W, N, H, C]
  std::vector<double> y;  // [W, N, L]

  std::size_t windows() const { return starts.size(); }
  model::InputBatch inputs(std::span<const std::size_t> ids) const;
  std::vector<double> targets(std::span<const std::size_t> ids) const;
};

/// Windows lying entirely inside `range`. `normalized` feeds the inputs,
/// `raw` the targets.
PreparedSplit prepare_split(const Matrix &normalized, const Matrix &raw, Range range,
                            std::size_t history, std::size_t horizon, std::size_t stride,
                            const MaskSpec &mask, const ChannelOptions &channels);

struct SynthResult {
  TimeSeriesDataset dataset;
  Matrix adjacency;  // ground-truth weighted graph
};

/// Spatially correlated series over a random geometric graph: shared
/// periodic and autoregressive drivers with smoothly varying loadings,
/// diffused along the graph each step, plus Gaussian observation noise.
SynthResult synth_generate(std::size_t n, std::size_t steps, std::uint64_t graph_seed, double noise);

} // namespace ginar::data
