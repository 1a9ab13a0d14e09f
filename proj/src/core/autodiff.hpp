// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

// Dense reverse-mode automatic differentiation.
//
// A Tensor is a shared handle onto a node of the computation graph. Every
// operation allocates a fresh node whose id is strictly larger than the ids
// of its inputs, so sorting reachable nodes by descending id yields a valid
// reverse topological order (the tape). Parameters are leaves that keep
// their gradient between backward passes until zero_grad() is called.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace ginar::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape &shape);
std::string shape_str(const Shape &shape);

template <typename Real> struct Node;

template <typename Real>
using BackwardFn = std::function<void(Node<Real> &)>;

template <typename Real> struct Node {
  std::uint64_t id = 0;
  const char *op = "leaf";
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until first accumulated into
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn<Real> backward;

  std::vector<Real> &ensure_grad() {
    if (grad.size() != value.size())
      grad.assign(value.size(), Real(0));
    return grad;
  }
};

template <typename Real> class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}

  /// Non-differentiable value.
  static Tensor constant(Shape shape, std::vector<Real> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, Real value);
  /// Learnable leaf; gradients accumulate on it across backward calls.
  static Tensor parameter(Shape shape, std::vector<Real> values);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  std::uint64_t id() const { return node_->id; }

  std::span<const Real> data() const { return node_->value; }
  /// Direct write access; only meaningful for leaves (optimizer updates).
  std::span<Real> mutable_data() { return node_->value; }
  /// Empty span when no gradient has reached this tensor.
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() { return node_->ensure_grad(); }

  Real item() const;
  Real at(std::initializer_list<std::size_t> index) const;

  void zero_grad();
  /// Populates gradients of every reachable parameter. Requires a
  /// single-element tensor.
  void backward() const;

  const std::shared_ptr<Node<Real>> &node() const { return node_; }

 private:
  std::shared_ptr<Node<Real>> node_;
};

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Elementwise binary ops broadcast the smaller operand when its shape is a
// suffix of the larger operand's shape ([C] onto [B,N,C], [N,N] onto
// [B,N,N]).
template <typename Real> Tensor<Real> add(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> sub(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> hadamard(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> scale(const Tensor<Real> &a, Real s);
template <typename Real> Tensor<Real> add_scalar(const Tensor<Real> &a, Real s);
/// 1 - a
template <typename Real> Tensor<Real> one_minus(const Tensor<Real> &a);

/// [..., M, K] x [K, P], [M, K] x [B..., K, P] or batched [B..., M, K] x
/// [B..., K, P] with identical leading extents.
template <typename Real> Tensor<Real> matmul(const Tensor<Real> &a, const Tensor<Real> &b);
/// Swaps the two trailing axes.
template <typename Real> Tensor<Real> transpose(const Tensor<Real> &a);
template <typename Real> Tensor<Real> concat(const std::vector<Tensor<Real>> &parts);
/// Repeats `a` along a new leading axis of extent `batch`.
template <typename Real> Tensor<Real> broadcast_leading(const Tensor<Real> &a, std::size_t batch);
template <typename Real> Tensor<Real> reshape(const Tensor<Real> &a, Shape shape);
/// Gathers rows (second-to-last axis) in the given order.
template <typename Real>
Tensor<Real> select_rows(const Tensor<Real> &a, const std::vector<std::size_t> &rows);

enum class Activation { kReLU, kGeLU, kELU, kLeakyReLU, kSigmoid };

template <typename Real>
Tensor<Real> activation(const Tensor<Real> &x, Activation kind, Real leaky_slope = Real(0.01));
template <typename Real> Tensor<Real> relu(const Tensor<Real> &x);
template <typename Real> Tensor<Real> gelu(const Tensor<Real> &x);
template <typename Real> Tensor<Real> elu(const Tensor<Real> &x);
template <typename Real> Tensor<Real> leaky_relu(const Tensor<Real> &x, Real slope = Real(0.01));
template <typename Real> Tensor<Real> sigmoid(const Tensor<Real> &x);
template <typename Real> Tensor<Real> abs(const Tensor<Real> &x);

/// Max-subtracted softmax over the last axis.
template <typename Real> Tensor<Real> softmax(const Tensor<Real> &x);

/// Normalizes over the last axis, then applies gain and bias of that
/// extent. Variance is the biased (population) estimate.
template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real> &x, const Tensor<Real> &gain,
                        const Tensor<Real> &bias, Real eps = Real(1e-5));

template <typename Real> Tensor<Real> sum(const Tensor<Real> &x);
template <typename Real> Tensor<Real> mean(const Tensor<Real> &x);

/// Attention restricted to a fixed 0/1 neighbor pattern.
///
/// `src` holds one score per source variable, shape [..., N, 1]; `dst`, when
/// defined, adds a per-target score of the same shape. `prior`, when
/// defined, is a strictly positive [N, N] weight multiplying each
/// numerator. With z_ij = LeakyReLU(dst_i + src_j) the result is
///   alpha_ij = pattern_ij prior_ij exp(z_ij) / sum_k pattern_ik prior_ik exp(z_ik)
/// over rows with at least one neighbor; rows without neighbors are zero.
template <typename Real>
Tensor<Real> neighbor_attention(const Tensor<Real> &src, const Tensor<Real> &dst,
                                const Tensor<Real> &prior,
                                std::span<const std::uint8_t> pattern,
                                Real leaky_slope);

// Scalar-valued helpers used by gradient checks and tests.
struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Compares analytic gradients of `f` against central differences for each
/// parameter. Errors are |analytic - numeric| / max(1, |numeric|).
GradCheckReport grad_check(const std::function<Tensor<double>()> &f,
                           std::vector<std::pair<std::string, Tensor<double>>> params,
                           double eps = 1e-5, double tol = 1e-4);

} // namespace ginar::ad
