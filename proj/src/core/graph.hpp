// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>

#include <Eigen/Core>

#include "core/autodiff.hpp"

namespace ginar {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace graph {

/// Thresholded Gaussian kernel exp(-d^2 / sigma^2) over a symmetric,
/// nonnegative distance table. Pairs at or beyond `threshold` get 0.
Matrix build_adjacency_distance(const Matrix &distances, double threshold, double sigma);

/// |Pearson correlation| between rows of an N x T series, cut at
/// `threshold`. Rows listed in `excluded` (and zero-variance rows) carry no
/// edges.
Matrix build_adjacency_pearson(const Matrix &series, double threshold,
                               std::span<const std::size_t> excluded = {});

/// I + D^{-1/2} A D^{-1/2}; zero-degree nodes keep only their identity row.
Matrix normalize_predefined(const Matrix &adjacency);

/// Header-free N x N CSV.
Matrix load_adjacency_csv(const std::string &path);

template <typename Real> ad::Tensor<Real> to_tensor(const Matrix &m) {
  std::vector<Real> values(static_cast<std::size_t>(m.size()));
  for (Eigen::Index k = 0; k < m.size(); ++k)
    values[static_cast<std::size_t>(k)] = static_cast<Real>(m.data()[k]);
  return ad::Tensor<Real>::constant(
      {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
      std::move(values));
}

/// Learnable state behind the adaptive graph: a static variable embedding
/// fused with the current representation.
template <typename Real> struct AdaptiveGraphState {
  ad::Tensor<Real> embedding;   // [N, d]
  ad::Tensor<Real> w_x;         // [C', d]
  ad::Tensor<Real> w_e;         // [d, d]
  ad::Tensor<Real> fc_w;        // [2d, d]
  ad::Tensor<Real> fc_b;        // [d]

  static AdaptiveGraphState init(std::size_t n, std::size_t width, std::size_t d,
                                 std::mt19937_64 &rng);
};

/// E_n = FC(concat(x_ia W_x, E_A W_e)). `x_ia` is [N, C'] or [B, N, C'].
template <typename Real>
ad::Tensor<Real> fuse_embedding(const ad::Tensor<Real> &x_ia, const AdaptiveGraphState<Real> &state);

/// I + row-softmax(GeLU(E_n E_n^T)); every row sums to 2.
template <typename Real> ad::Tensor<Real> adaptive_adjacency(const ad::Tensor<Real> &e_n);

} // namespace graph
} // namespace ginar
