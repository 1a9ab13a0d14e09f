// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/data.hpp"
#include "core/interpolation_attention.hpp"
#include "core/training.hpp"

namespace ginar::config {

struct SynthSpec {
  std::size_t vars = 20;
  std::size_t steps = 2000;
  std::uint64_t graph_seed = 7;
  double noise = 0.05;
};

struct DatasetSpec {
  std::string path;            // CSV of series; empty when `synth` is set
  std::string distances;       // optional N x N CSV (no header)
  std::string coords;          // optional N x 2 CSV (no header)
  std::string adjacency;       // optional N x N CSV used as the raw predefined graph
  double granularity = 300.0;
  std::optional<SynthSpec> synth;
};

struct GraphSpec {
  std::string kind = "auto";   // auto | distance | pearson | file | identity
  double threshold = 0.0;      // 0: kind-specific default
  double sigma = 0.0;          // 0: std of the finite distances
};

/// Width/depth overrides; unset fields follow the per-rate defaults.
struct ModelSpec {
  std::optional<std::size_t> embed, var_embed, layers;
  std::size_t decoder_hidden = 64;
  double dropout = 0.15;
  bool sigmoid_gates = false;
};

struct Ablation {
  bool ia = true, pg = true, ag = true;
};

struct BaselineSpec {
  std::size_t hidden = 64;
  std::size_t ia_width = 32;
  std::size_t var_embed = 16;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  GraphSpec graph;
  double missing_rate = 0.5;
  std::vector<double> rates;  // impute-eval sweep; empty: {missing_rate}
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::array<double, 3> split{0.7, 0.1, 0.2};
  std::size_t history = 12;
  std::size_t horizon = 12;
  std::size_t stride = 1;     // training-window stride; evaluation always uses 1
  train::TrainConfig train;
  ModelSpec model;
  Ablation ablation;
  ia::IAOptions ia;
  data::ChannelOptions channels;
  BaselineSpec baseline;
  std::string output = "ginar_out";
  std::size_t snapshot_index = 0;   // test window used for the spatial snapshot
  std::size_t snapshot_horizon = 0; // 0-based step within that window

  void validate() const;
};

ExperimentConfig parse(const std::string &json_text);
ExperimentConfig load(const std::string &path);
/// Canonical JSON with every field spelled out; parse(to_json(c)) == c.
std::string to_json(const ExperimentConfig &cfg);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig &cfg);

/// Per-rate defaults: C' 32/32/16/16, d 16/16/8/8, layers 2/2/3/3 for the
/// 25/50/75/90% columns; the nearest column is used, 0% maps to 25%.
struct RateDefaults {
  std::size_t embed, var_embed, layers;
};
RateDefaults rate_defaults(double rate);

} // namespace ginar::config
