// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

// Interpolation attention: rebuilds the representation of missing variables
// from normal ones through a learned correspondence matrix and attention.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "core/autodiff.hpp"

namespace ginar::ia {

struct IAOptions {
  /// Neighbor cap per missing variable; clamped to N-1.
  std::size_t k = 10;
  /// Scores from concatenated (i, j) projections instead of j alone.
  bool pairwise_scores = false;
  /// Multiply each attention numerator by the correspondence weight
  /// A_IA[i][j], so the correspondence embeddings receive gradient.
  bool correspondence_weighted = true;
  double leaky_slope = 0.01;
};

template <typename Real> struct IAState {
  ad::Tensor<Real> e1;       // [N, d]
  ad::Tensor<Real> e2;       // [d, N]
  ad::Tensor<Real> w;        // [C, C'] shared projection
  ad::Tensor<Real> score_w;  // [C', 1] score head over the source variable
  ad::Tensor<Real> score_b;  // [1]
  ad::Tensor<Real> dst_w;    // [C', 1] target half of the pairwise head

  static IAState init(std::size_t n, std::size_t in_width, std::size_t out_width,
                      std::size_t d, std::mt19937_64 &rng);
  std::size_t variables() const { return e1.dim(0); }
  std::size_t out_width() const { return w.dim(1); }
};

/// A_IA = I + row-softmax(ReLU(E_IA1 E_IA2)).
template <typename Real> ad::Tensor<Real> build_correspondence(const IAState<Real> &state);

/// The k largest off-diagonal entries of `row`, restricted to `eligible`
/// variables when that span is non-empty. Ties go to the lower index.
template <typename Real>
std::vector<std::size_t> neighbor_set(std::span<const Real> row, std::size_t i, std::size_t k,
                                      std::span<const std::uint8_t> eligible = {});

/// N x N 0/1 pattern whose row i is the neighbor set of missing variable i;
/// rows of normal variables are empty.
template <typename Real>
std::vector<std::uint8_t> neighbor_pattern(std::span<const Real> correspondence,
                                           std::span<const std::uint8_t> missing, std::size_t k);

/// Attention weights of missing variable `i` over `neighbors` for [N, C]
/// features. `correspondence` is only consulted when the options ask for
/// correspondence weighting.
template <typename Real>
ad::Tensor<Real> attention_coefficients(const IAState<Real> &state, const ad::Tensor<Real> &features,
                                        std::size_t i, const std::vector<std::size_t> &neighbors,
                                        const IAOptions &options,
                                        const ad::Tensor<Real> &correspondence = {});

/// ReLU(sum_j alpha_j W h_j) as a [C'] vector.
template <typename Real>
ad::Tensor<Real> recover_variable(const IAState<Real> &state, const ad::Tensor<Real> &features,
                                  const ad::Tensor<Real> &alpha,
                                  const std::vector<std::size_t> &neighbors);

/// Batched interpolation attention over [N, C] or [B, N, C] inputs. Missing
/// rows are zeroed on entry and rebuilt from normal rows; normal rows become
/// ReLU(W h_j).
template <typename Real>
ad::Tensor<Real> apply_ia(const IAState<Real> &state, const ad::Tensor<Real> &x,
                          std::span<const std::uint8_t> missing, const IAOptions &options);

/// ReLU(x W) for every row; the path used when interpolation is ablated.
template <typename Real>
ad::Tensor<Real> project_only(const IAState<Real> &state, const ad::Tensor<Real> &x);

} // namespace ginar::ia
