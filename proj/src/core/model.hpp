// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

// GinAR: recurrent cells whose gates are adaptive graph convolutions over
// interpolation-attention outputs, stacked into an encoder and read out by a
// direct multi-step MLP decoder. Also hosts the per-variable MLP forecasters
// used as the missing-blind reference and as the imputation testbed.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "core/autodiff.hpp"
#include "core/graph.hpp"
#include "core/interpolation_attention.hpp"

namespace ginar::model {

template <typename Real>
using ParamList = std::vector<std::pair<std::string, ad::Tensor<Real>>>;

struct ModelConfig {
  std::size_t num_vars = 0;
  std::size_t in_channels = 1;
  std::size_t embed = 32;      // C'
  std::size_t var_embed = 16;  // d
  std::size_t layers = 2;
  std::size_t history = 12;
  std::size_t horizon = 12;
  std::size_t decoder_hidden = 64;
  double dropout = 0.15;
  double ln_eps = 1e-5;
  bool use_ia = true;
  bool use_pg = true;
  bool use_ag = true;
  bool sigmoid_gates = false;
  ia::IAOptions ia;
};

/// Input windows laid out as [B, N, H, C].
struct InputBatch {
  std::size_t batch = 0;
  std::size_t vars = 0;
  std::size_t history = 0;
  std::size_t channels = 0;
  std::vector<double> x;
};

template <typename Real> struct GateParams {
  ad::Tensor<Real> w1, b1, w2, b2;  // b1/b2 stay undefined for the candidate
  ad::Tensor<Real> ln_gain, ln_bias;
};

template <typename Real> struct LayerParams {
  ia::IAState<Real> ia;
  graph::AdaptiveGraphState<Real> ag;
  GateParams<Real> forget, reset, candidate;
};

template <typename Real> struct DecoderParams {
  ad::Tensor<Real> w1, b1, w2, b2;
};

/// Test hooks: saturate gates or skip layer normalization.
struct CellOptions {
  std::optional<double> force_forget;
  std::optional<double> force_reset;
  bool bypass_ln = false;
};

template <typename Real> struct CellContext {
  const ModelConfig *config = nullptr;
  ad::Tensor<Real> a_pre;  // undefined when the predefined graph is ablated
  std::span<const std::uint8_t> missing;
  CellOptions options;
};

/// LN(A_pre x W1 + b1 + A_adap x W2 + b2); either graph may be undefined,
/// but not both.
template <typename Real>
ad::Tensor<Real> agcn_apply(const ad::Tensor<Real> &x_ia, const ad::Tensor<Real> &a_pre,
                            const ad::Tensor<Real> &a_adap, const GateParams<Real> &gate,
                            bool bypass_ln = false, double ln_eps = 1e-5);

/// One recurrent step; returns (h_t, c_t).
template <typename Real>
std::pair<ad::Tensor<Real>, ad::Tensor<Real>>
cell_step(const LayerParams<Real> &params, const ad::Tensor<Real> &x_t,
          const ad::Tensor<Real> &c_prev, const CellContext<Real> &ctx);

/// Runs cell_step left to right from c_0 = 0. `final_cell`, when given,
/// receives c_H.
template <typename Real>
std::vector<ad::Tensor<Real>> layer_forward(const LayerParams<Real> &params,
                                            const std::vector<ad::Tensor<Real>> &x_seq,
                                            const CellContext<Real> &ctx,
                                            ad::Tensor<Real> *final_cell = nullptr);

/// Y = FC(ReLU(FC(h_all))).
template <typename Real>
ad::Tensor<Real> decode(const DecoderParams<Real> &dec, const ad::Tensor<Real> &h_all);

/// Common surface for everything the training engine can fit. Outputs are
/// normalized-scale [B, N, L] forecasts.
template <typename Real> class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual ad::Tensor<Real> forward(const InputBatch &batch, bool training, std::mt19937_64 &rng) = 0;
  virtual ParamList<Real> parameters() const = 0;
  virtual std::string kind() const = 0;
  virtual std::size_t num_vars() const = 0;
  virtual std::size_t horizon() const = 0;
};

template <typename Real> class GinAR final : public Forecaster<Real> {
 public:
  /// Parameters are drawn from `seed`; the full set is created regardless of
  /// ablation flags so paired variants share initial weights.
  GinAR(ModelConfig config, std::uint64_t seed);

  void set_predefined_graph(const Matrix &a_pre);
  void set_missing(std::vector<std::uint8_t> missing);
  const std::vector<std::uint8_t> &missing() const { return missing_; }
  const ModelConfig &config() const { return config_; }
  CellOptions &cell_options() { return cell_options_; }

  ad::Tensor<Real> forward(const InputBatch &batch, bool training, std::mt19937_64 &rng) override;
  ParamList<Real> parameters() const override;
  std::string kind() const override { return "ginar"; }
  std::size_t num_vars() const override { return config_.num_vars; }
  std::size_t horizon() const override { return config_.horizon; }

  /// Splits [B, N, H, C] windows into H per-step [B, N, C] constants.
  std::vector<ad::Tensor<Real>> split_steps(const InputBatch &batch) const;
  /// h_all: the last hidden state of every layer, concatenated in layer order.
  ad::Tensor<Real> encode(const std::vector<ad::Tensor<Real>> &x_seq, bool training,
                          std::mt19937_64 *rng) const;

  const std::vector<LayerParams<Real>> &layers() const { return layers_; }
  std::vector<LayerParams<Real>> &layers() { return layers_; }
  const DecoderParams<Real> &decoder() const { return decoder_; }
  DecoderParams<Real> &decoder() { return decoder_; }

 private:
  CellContext<Real> context() const;

  ModelConfig config_;
  std::vector<LayerParams<Real>> layers_;
  DecoderParams<Real> decoder_;
  ad::Tensor<Real> a_pre_;
  std::vector<std::uint8_t> missing_;
  CellOptions cell_options_;
};

/// Two-layer MLP applied to each variable's own flattened history. Missing
/// variables see their zero-filled inputs.
template <typename Real> class MlpForecaster final : public Forecaster<Real> {
 public:
  MlpForecaster(std::size_t num_vars, std::size_t history, std::size_t channels,
                std::size_t hidden, std::size_t horizon, std::uint64_t seed);

  ad::Tensor<Real> forward(const InputBatch &batch, bool training, std::mt19937_64 &rng) override;
  ParamList<Real> parameters() const override;
  std::string kind() const override { return "mlp"; }
  std::size_t num_vars() const override { return num_vars_; }
  std::size_t horizon() const override { return horizon_; }

 private:
  std::size_t num_vars_, in_width_, horizon_;
  DecoderParams<Real> mlp_;
};

/// Interpolation attention over whole-window features followed by the same
/// per-variable MLP, trained end to end.
template <typename Real> class IaMlpForecaster final : public Forecaster<Real> {
 public:
  IaMlpForecaster(std::size_t num_vars, std::size_t history, std::size_t channels,
                  std::size_t ia_width, std::size_t var_embed, std::size_t hidden,
                  std::size_t horizon, ia::IAOptions options, std::uint64_t seed);

  void set_missing(std::vector<std::uint8_t> missing) { missing_ = std::move(missing); }

  ad::Tensor<Real> forward(const InputBatch &batch, bool training, std::mt19937_64 &rng) override;
  ParamList<Real> parameters() const override;
  std::string kind() const override { return "ia_mlp"; }
  std::size_t num_vars() const override { return num_vars_; }
  std::size_t horizon() const override { return horizon_; }

 private:
  std::size_t num_vars_, in_width_, horizon_;
  ia::IAState<Real> ia_;
  ia::IAOptions options_;
  DecoderParams<Real> mlp_;
  std::vector<std::uint8_t> missing_;
};

/// Flattens each variable's history into one feature row: [B, N, H*C].
template <typename Real> ad::Tensor<Real> flatten_history(const InputBatch &batch);

} // namespace ginar::model
