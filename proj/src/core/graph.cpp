// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/graph.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "core/init.hpp"

namespace ginar::graph {

Matrix build_adjacency_distance(const Matrix &distances, double threshold, double sigma) {
  require(distances.rows() == distances.cols(), ErrorCode::kShapeMismatch,
          "distance table must be square");
  require(sigma > 0, ErrorCode::kInvalidArgument, "distance kernel sigma must be positive");
  const Eigen::Index n = distances.rows();
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = distances(i, j);
      if (d < 0 || std::isnan(d))
        fail(ErrorCode::kInvalidArgument, "negative distance at (" + std::to_string(i) +
                                              "," + std::to_string(j) + ")");
      if (i != j && d < threshold)
        a(i, j) = std::exp(-(d * d) / (sigma * sigma));
    }
  }
  return a;
}

Matrix build_adjacency_pearson(const Matrix &series, double threshold,
                               std::span<const std::size_t> excluded) {
  const Eigen::Index n = series.rows();
  const Eigen::Index t = series.cols();
  require(t >= 2, ErrorCode::kInvalidArgument, "pearson graph needs at least 2 time steps");
  std::vector<bool> skip(static_cast<std::size_t>(n), false);
  for (const std::size_t i : excluded) {
    require(i < static_cast<std::size_t>(n), ErrorCode::kInvalidArgument,
            "excluded variable index out of range");
    skip[i] = true;
  }

  Matrix centered = series.colwise() - series.rowwise().mean();
  Eigen::VectorXd norms = centered.rowwise().norm();
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (skip[static_cast<std::size_t>(i)] || norms(i) == 0.0)
      continue;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (skip[static_cast<std::size_t>(j)] || norms(j) == 0.0)
        continue;
      const double rho = centered.row(i).dot(centered.row(j)) / (norms(i) * norms(j));
      const double w = std::abs(rho);
      if (w >= threshold)
        a(i, j) = a(j, i) = std::min(w, 1.0);
    }
  }
  return a;
}

Matrix normalize_predefined(const Matrix &adjacency) {
  require(adjacency.rows() == adjacency.cols(), ErrorCode::kShapeMismatch,
          "adjacency must be square");
  const Eigen::Index n = adjacency.rows();
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double deg = adjacency.row(i).sum();
    require(deg >= 0, ErrorCode::kInvalidArgument, "adjacency must be nonnegative");
    inv_sqrt(i) = deg > 0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Matrix out = inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal();
  out.diagonal().array() += 1.0;
  return out;
}

Matrix load_adjacency_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::kIo, "cannot open adjacency file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r")
      continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception &) {
        fail(ErrorCode::kDataFormat, "non-numeric adjacency cell '" + cell + "' in " + path);
      }
    }
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      fail(ErrorCode::kDataFormat, "adjacency file " + path + " is not square");
    for (std::size_t j = 0; j < n; ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return a;
}

template <typename Real>
AdaptiveGraphState<Real> AdaptiveGraphState<Real>::init(std::size_t n, std::size_t width,
                                                        std::size_t d, std::mt19937_64 &rng) {
  AdaptiveGraphState s;
  s.embedding = uniform_parameter<Real>({n, d}, init_bound(d), rng);
  s.w_x = uniform_parameter<Real>({width, d}, init_bound(width), rng);
  s.w_e = uniform_parameter<Real>({d, d}, init_bound(d), rng);
  s.fc_w = uniform_parameter<Real>({2 * d, d}, init_bound(2 * d), rng);
  s.fc_b = zero_parameter<Real>({d});
  return s;
}

template <typename Real>
ad::Tensor<Real> fuse_embedding(const ad::Tensor<Real> &x_ia, const AdaptiveGraphState<Real> &state) {
  const std::size_t n = state.embedding.dim(0);
  if (x_ia.rank() < 2 || x_ia.dim(x_ia.rank() - 2) != n)
    fail(ErrorCode::kShapeMismatch, "fuse_embedding: representation " +
                                        ad::shape_str(x_ia.shape()) + " does not have " +
                                        std::to_string(n) + " variables");
  auto from_x = ad::matmul(x_ia, state.w_x);
  auto from_e = ad::matmul(state.embedding, state.w_e);
  if (x_ia.rank() == 3)
    from_e = ad::broadcast_leading(from_e, x_ia.dim(0));
  auto fused = ad::concat<Real>({from_x, from_e});
  return ad::add(ad::matmul(fused, state.fc_w), state.fc_b);
}

template <typename Real> ad::Tensor<Real> adaptive_adjacency(const ad::Tensor<Real> &e_n) {
  const std::size_t n = e_n.dim(e_n.rank() - 2);
  auto scores = ad::gelu(ad::matmul(e_n, ad::transpose(e_n)));
  return ad::add(ad::softmax(scores), identity<Real>(n));
}

template struct AdaptiveGraphState<float>;
template struct AdaptiveGraphState<double>;
template ad::Tensor<float> fuse_embedding(const ad::Tensor<float> &, const AdaptiveGraphState<float> &);
template ad::Tensor<double> fuse_embedding(const ad::Tensor<double> &, const AdaptiveGraphState<double> &);
template ad::Tensor<float> adaptive_adjacency(const ad::Tensor<float> &);
template ad::Tensor<double> adaptive_adjacency(const ad::Tensor<double> &);

} // namespace ginar::graph
