// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/interpolation_attention.hpp"

#include <algorithm>
#include <numeric>

#include "core/init.hpp"

namespace ginar::ia {

namespace {

// [N, C] 0/1 mask with missing rows cleared, broadcastable over a batch.
template <typename Real>
ad::Tensor<Real> keep_rows(std::span<const std::uint8_t> missing, std::size_t width) {
  const std::size_t n = missing.size();
  std::vector<Real> values(n * width, Real(1));
  for (std::size_t i = 0; i < n; ++i)
    if (missing[i])
      std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(i * width), width, Real(0));
  return ad::Tensor<Real>::constant({n, width}, std::move(values));
}

template <typename Real> void check_features(const IAState<Real> &state, const ad::Tensor<Real> &x) {
  const std::size_t n = state.variables();
  if (x.rank() < 2 || x.dim(x.rank() - 2) != n || x.shape().back() != state.w.dim(0))
    fail(ErrorCode::kShapeMismatch,
         "interpolation attention: input " + ad::shape_str(x.shape()) + " does not match [" +
             std::to_string(n) + "," + std::to_string(state.w.dim(0)) + "]");
}

} // namespace

template <typename Real>
IAState<Real> IAState<Real>::init(std::size_t n, std::size_t in_width, std::size_t out_width,
                                  std::size_t d, std::mt19937_64 &rng) {
  IAState s;
  s.e1 = uniform_parameter<Real>({n, d}, init_bound(d), rng);
  s.e2 = uniform_parameter<Real>({d, n}, init_bound(d), rng);
  s.w = uniform_parameter<Real>({in_width, out_width}, init_bound(in_width), rng);
  s.score_w = uniform_parameter<Real>({out_width, 1}, init_bound(out_width), rng);
  s.score_b = zero_parameter<Real>({1});
  s.dst_w = uniform_parameter<Real>({out_width, 1}, init_bound(out_width), rng);
  return s;
}

template <typename Real> ad::Tensor<Real> build_correspondence(const IAState<Real> &state) {
  auto scores = ad::relu(ad::matmul(state.e1, state.e2));
  return ad::add(ad::softmax(scores), identity<Real>(state.variables()));
}

template <typename Real>
std::vector<std::size_t> neighbor_set(std::span<const Real> row, std::size_t i, std::size_t k,
                                      std::span<const std::uint8_t> eligible) {
  const std::size_t n = row.size();
  require(k >= 1, ErrorCode::kInvalidArgument, "neighbor cap must be at least 1");
  require(i < n, ErrorCode::kInvalidArgument, "neighbor_set: variable index out of range");
  require(eligible.empty() || eligible.size() == n, ErrorCode::kShapeMismatch,
          "neighbor_set: eligibility mask length differs from row length");
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < n; ++j)
    if (j != i && (eligible.empty() || eligible[j]))
      candidates.push_back(j);
  const std::size_t take = std::min({k, n == 0 ? 0 : n - 1, candidates.size()});
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  candidates.resize(take);
  return candidates;
}

template <typename Real>
std::vector<std::uint8_t> neighbor_pattern(std::span<const Real> correspondence,
                                           std::span<const std::uint8_t> missing, std::size_t k) {
  const std::size_t n = missing.size();
  require(correspondence.size() == n * n, ErrorCode::kShapeMismatch,
          "neighbor_pattern: correspondence is not N x N");
  std::vector<std::uint8_t> normal(n);
  for (std::size_t j = 0; j < n; ++j)
    normal[j] = missing[j] ? 0 : 1;
  std::vector<std::uint8_t> pattern(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!missing[i])
      continue;
    for (const std::size_t j : neighbor_set<Real>(correspondence.subspan(i * n, n), i, k, normal))
      pattern[i * n + j] = 1;
  }
  return pattern;
}

template <typename Real>
ad::Tensor<Real> attention_coefficients(const IAState<Real> &state, const ad::Tensor<Real> &features,
                                        std::size_t i, const std::vector<std::size_t> &neighbors,
                                        const IAOptions &options,
                                        const ad::Tensor<Real> &correspondence) {
  check_features(state, features);
  require(features.rank() == 2, ErrorCode::kShapeMismatch,
          "attention_coefficients expects [N, C] features");
  if (neighbors.empty())
    fail(ErrorCode::kInvalidArgument,
         "attention_coefficients: empty neighbor set for variable " + std::to_string(i));
  const std::size_t n = state.variables();
  std::vector<std::uint8_t> pattern(n * n, 0);
  for (const std::size_t j : neighbors) {
    require(j < n && j != i, ErrorCode::kInvalidArgument, "attention_coefficients: bad neighbor");
    pattern[i * n + j] = 1;
  }
  auto projected = ad::matmul(features, state.w);
  auto src = ad::add(ad::matmul(projected, state.score_w), state.score_b);
  ad::Tensor<Real> dst = options.pairwise_scores ? ad::matmul(projected, state.dst_w) : ad::Tensor<Real>{};
  ad::Tensor<Real> prior = options.correspondence_weighted ? correspondence : ad::Tensor<Real>{};
  auto alpha = ad::neighbor_attention(src, dst, prior, pattern, static_cast<Real>(options.leaky_slope));
  auto row = ad::transpose(ad::select_rows(alpha, {i}));  // [N, 1]
  return ad::reshape(ad::select_rows(row, neighbors), {neighbors.size()});
}

template <typename Real>
ad::Tensor<Real> recover_variable(const IAState<Real> &state, const ad::Tensor<Real> &features,
                                  const ad::Tensor<Real> &alpha,
                                  const std::vector<std::size_t> &neighbors) {
  check_features(state, features);
  require(alpha.size() == neighbors.size(), ErrorCode::kShapeMismatch,
          "recover_variable: one weight per neighbor required");
  auto projected = ad::select_rows(ad::matmul(features, state.w), neighbors);  // [k, C']
  auto weights = ad::reshape(alpha, {1, neighbors.size()});
  auto mixed = ad::relu(ad::matmul(weights, projected));
  return ad::reshape(mixed, {state.out_width()});
}

template <typename Real>
ad::Tensor<Real> apply_ia(const IAState<Real> &state, const ad::Tensor<Real> &x,
                          std::span<const std::uint8_t> missing, const IAOptions &options) {
  check_features(state, x);
  const std::size_t n = state.variables();
  require(missing.size() == n, ErrorCode::kShapeMismatch, "apply_ia: mask length differs from N");
  const bool any_missing = std::any_of(missing.begin(), missing.end(), [](auto m) { return m != 0; });
  if (!any_missing)
    return ad::relu(ad::matmul(x, state.w));

  auto zeroed = ad::hadamard(x, keep_rows<Real>(missing, x.shape().back()));
  auto projected = ad::matmul(zeroed, state.w);
  auto correspondence = build_correspondence(state);
  const auto pattern = neighbor_pattern<Real>(correspondence.data(), missing, options.k);

  auto src = ad::add(ad::matmul(projected, state.score_w), state.score_b);
  ad::Tensor<Real> dst = options.pairwise_scores ? ad::matmul(projected, state.dst_w) : ad::Tensor<Real>{};
  ad::Tensor<Real> prior = options.correspondence_weighted ? correspondence : ad::Tensor<Real>{};
  auto alpha = ad::neighbor_attention(src, dst, prior, pattern, static_cast<Real>(options.leaky_slope));

  // Recovered rows are zero for normal variables (empty attention rows) and
  // the projection is zero for missing variables (zeroed inputs), so the two
  // row sets combine by addition.
  auto recovered = ad::relu(ad::matmul(alpha, projected));
  return ad::add(recovered, ad::relu(projected));
}

template <typename Real>
ad::Tensor<Real> project_only(const IAState<Real> &state, const ad::Tensor<Real> &x) {
  check_features(state, x);
  return ad::relu(ad::matmul(x, state.w));
}

#define GINAR_INSTANTIATE(Real)                                                                  \
  template struct IAState<Real>;                                                                \
  template ad::Tensor<Real> build_correspondence(const IAState<Real> &);                        \
  template std::vector<std::size_t> neighbor_set(std::span<const Real>, std::size_t, std::size_t, \
                                                 std::span<const std::uint8_t>);                 \
  template std::vector<std::uint8_t> neighbor_pattern(std::span<const Real>,                    \
                                                      std::span<const std::uint8_t>, std::size_t); \
  template ad::Tensor<Real> attention_coefficients(const IAState<Real> &, const ad::Tensor<Real> &, \
                                                   std::size_t, const std::vector<std::size_t> &, \
                                                   const IAOptions &, const ad::Tensor<Real> &); \
  template ad::Tensor<Real> recover_variable(const IAState<Real> &, const ad::Tensor<Real> &,   \
                                             const ad::Tensor<Real> &,                          \
                                             const std::vector<std::size_t> &);                 \
  template ad::Tensor<Real> apply_ia(const IAState<Real> &, const ad::Tensor<Real> &,           \
                                     std::span<const std::uint8_t>, const IAOptions &);         \
  template ad::Tensor<Real> project_only(const IAState<Real> &, const ad::Tensor<Real> &);

GINAR_INSTANTIATE(float)
GINAR_INSTANTIATE(double)

#undef GINAR_INSTANTIATE

} // namespace ginar::ia
