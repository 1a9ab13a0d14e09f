// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#pragma once

#include <cmath>
#include <random>

#include "core/autodiff.hpp"

namespace ginar {

inline double init_bound(std::size_t fan_in) {
  return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

template <typename Real>
ad::Tensor<Real> uniform_parameter(ad::Shape shape, double bound, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<Real> values(ad::numel(shape));
  for (Real &v : values)
    v = static_cast<Real>(dist(rng));
  return ad::Tensor<Real>::parameter(std::move(shape), std::move(values));
}

template <typename Real> ad::Tensor<Real> zero_parameter(ad::Shape shape) {
  const std::size_t n = ad::numel(shape);
  return ad::Tensor<Real>::parameter(std::move(shape), std::vector<Real>(n, Real(0)));
}

template <typename Real> ad::Tensor<Real> one_parameter(ad::Shape shape) {
  const std::size_t n = ad::numel(shape);
  return ad::Tensor<Real>::parameter(std::move(shape), std::vector<Real>(n, Real(1)));
}

template <typename Real> ad::Tensor<Real> identity(std::size_t n) {
  std::vector<Real> values(n * n, Real(0));
  for (std::size_t i = 0; i < n; ++i)
    values[i * n + i] = Real(1);
  return ad::Tensor<Real>::constant({n, n}, std::move(values));
}

} // namespace ginar
