// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <Eigen/Core>

namespace ginar::ad {

namespace {

std::atomic<std::uint64_t> g_next_id{1};
thread_local bool t_grad_enabled = true;

template <typename Real>
using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real> using MapR = Eigen::Map<MatR<Real>>;
template <typename Real> using CMapR = Eigen::Map<const MatR<Real>>;

[[noreturn]] void shape_error(const char *op, const Shape &a, const Shape &b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << shape_str(a) << " and " << shape_str(b);
  fail(ErrorCode::kShapeMismatch, os.str());
}

template <typename Real>
Tensor<Real> make_op(const char *op, Shape shape, std::vector<Real> value,
                     std::initializer_list<const Tensor<Real> *> inputs,
                     BackwardFn<Real> fn) {
  for (const Real v : value) {
    if (!std::isfinite(v))
      fail(ErrorCode::kNonFinite, std::string("non-finite value produced by ") + op);
  }
  auto node = std::make_shared<Node<Real>>();
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  node->op = op;
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->leaf = false;
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto *t : inputs)
      needs = needs || (t->defined() && t->requires_grad());
  }
  if (needs) {
    node->requires_grad = true;
    for (const auto *t : inputs)
      if (t->defined())
        node->parents.push_back(t->node());
    node->backward = std::move(fn);
  }
  return Tensor<Real>(std::move(node));
}

bool is_suffix(const Shape &small, const Shape &big) {
  return small.size() <= big.size() &&
         std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

// Resolves suffix broadcasting; returns the output shape.
Shape broadcast_shape(const char *op, const Shape &a, const Shape &b) {
  if (is_suffix(b, a))
    return a;
  if (is_suffix(a, b))
    return b;
  shape_error(op, a, b);
}

template <typename Real> Node<Real> *parent(Node<Real> &self, std::size_t i) {
  return self.parents[i].get();
}

enum class BinaryKind { kAdd, kSub, kMul };

// Calls f(i, ia, ib) over the output, where one operand repeats with a
// period that divides the other's length.
template <typename F> void broadcast_loop(std::size_t n, std::size_t na, std::size_t nb, F &&f) {
  if (na == n && nb == n) {
    for (std::size_t i = 0; i < n; ++i)
      f(i, i, i);
  } else if (na == n) {
    for (std::size_t base = 0; base < n; base += nb)
      for (std::size_t j = 0; j < nb; ++j)
        f(base + j, base + j, j);
  } else {
    for (std::size_t base = 0; base < n; base += na)
      for (std::size_t j = 0; j < na; ++j)
        f(base + j, j, base + j);
  }
}

template <typename Real>
Tensor<Real> binary(const char *op, const Tensor<Real> &a, const Tensor<Real> &b,
                    BinaryKind kind) {
  Shape out_shape = broadcast_shape(op, a.shape(), b.shape());
  const std::size_t n = numel(out_shape);
  const std::size_t na = a.size(), nb = b.size();
  const Real *pa = a.data().data();
  const Real *pb = b.data().data();
  std::vector<Real> out(n);
  Real *po = out.data();
  if (n > 0) {
    switch (kind) {
    case BinaryKind::kAdd:
      broadcast_loop(n, na, nb, [&](std::size_t i, std::size_t ia, std::size_t ib) { po[i] = pa[ia] + pb[ib]; });
      break;
    case BinaryKind::kSub:
      broadcast_loop(n, na, nb, [&](std::size_t i, std::size_t ia, std::size_t ib) { po[i] = pa[ia] - pb[ib]; });
      break;
    case BinaryKind::kMul:
      broadcast_loop(n, na, nb, [&](std::size_t i, std::size_t ia, std::size_t ib) { po[i] = pa[ia] * pb[ib]; });
      break;
    }
  }
  return make_op<Real>(op, std::move(out_shape), std::move(out), {&a, &b},
                       [kind, na, nb](Node<Real> &self) {
    Node<Real> *na_node = parent(self, 0);
    Node<Real> *nb_node = parent(self, 1);
    const std::size_t n = self.value.size();
    if (n == 0)
      return;
    const Real *g = self.grad.data();
    if (na_node->requires_grad) {
      Real *ga = na_node->ensure_grad().data();
      if (kind == BinaryKind::kMul) {
        const Real *vb = nb_node->value.data();
        broadcast_loop(n, na, nb, [&](std::size_t i, std::size_t ia, std::size_t ib) { ga[ia] += g[i] * vb[ib]; });
      } else {
        broadcast_loop(n, na, nb, [&](std::size_t i, std::size_t ia, std::size_t) { ga[ia] += g[i]; });
      }
    }
    if (nb_node->requires_grad) {
      Real *gb = nb_node->ensure_grad().data();
      switch (kind) {
      case BinaryKind::kAdd:
        broadcast_loop(n, na, nb, [&](std::size_t i, std::size_t, std::size_t ib) { gb[ib] += g[i]; });
        break;
      case BinaryKind::kSub:
        broadcast_loop(n, na, nb, [&](std::size_t i, std::size_t, std::size_t ib) { gb[ib] -= g[i]; });
        break;
      case BinaryKind::kMul: {
        const Real *va = na_node->value.data();
        broadcast_loop(n, na, nb, [&](std::size_t i, std::size_t ia, std::size_t ib) { gb[ib] += g[i] * va[ia]; });
        break;
      }
      }
    }
  });
}

template <typename Real> Real gelu_value(Real x) {
  constexpr Real c = Real(0.7978845608028654);  // sqrt(2/pi)
  const Real u = c * (x + Real(0.044715) * x * x * x);
  return Real(0.5) * x * (Real(1) + std::tanh(u));
}

template <typename Real> Real gelu_deriv(Real x) {
  constexpr Real c = Real(0.7978845608028654);
  const Real u = c * (x + Real(0.044715) * x * x * x);
  const Real t = std::tanh(u);
  return Real(0.5) * (Real(1) + t) +
         Real(0.5) * x * (Real(1) - t * t) * c * (Real(1) + Real(3) * Real(0.044715) * x * x);
}

template <typename Real> Real sigmoid_value(Real x) {
  if (x >= 0)
    return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

} // namespace

std::size_t numel(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

// ---------------------------------------------------------------- Tensor

template <typename Real>
Tensor<Real> Tensor<Real>::constant(Shape shape, std::vector<Real> values) {
  if (numel(shape) != values.size())
    fail(ErrorCode::kShapeMismatch, "constant: " + std::to_string(values.size()) +
                                        " values for shape " + shape_str(shape));
  auto node = std::make_shared<Node<Real>>();
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

template <typename Real> Tensor<Real> Tensor<Real>::zeros(Shape shape) {
  const std::size_t n = numel(shape);
  return constant(std::move(shape), std::vector<Real>(n, Real(0)));
}

template <typename Real> Tensor<Real> Tensor<Real>::full(Shape shape, Real value) {
  const std::size_t n = numel(shape);
  return constant(std::move(shape), std::vector<Real>(n, value));
}

template <typename Real>
Tensor<Real> Tensor<Real>::parameter(Shape shape, std::vector<Real> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  t.node_->op = "parameter";
  return t;
}

template <typename Real> Real Tensor<Real>::item() const {
  if (size() != 1)
    fail(ErrorCode::kShapeMismatch, "item: tensor of shape " + shape_str(shape()) +
                                        " is not a scalar");
  return node_->value[0];
}

template <typename Real>
Real Tensor<Real>::at(std::initializer_list<std::size_t> index) const {
  const Shape &s = shape();
  if (index.size() != s.size())
    fail(ErrorCode::kShapeMismatch, "at: index rank does not match " + shape_str(s));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (const std::size_t i : index) {
    if (i >= s[axis])
      fail(ErrorCode::kInvalidArgument, "at: index out of range for " + shape_str(s));
    flat = flat * s[axis] + i;
    ++axis;
  }
  return node_->value[flat];
}

template <typename Real> void Tensor<Real>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

template <typename Real> void Tensor<Real>::backward() const {
  if (size() != 1)
    fail(ErrorCode::kShapeMismatch,
         "backward: loss must be scalar, got shape " + shape_str(shape()));
  if (!node_->requires_grad)
    return;

  std::vector<Node<Real> *> order;
  std::unordered_set<Node<Real> *> seen;
  std::vector<Node<Real> *> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node<Real> *n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto &p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second)
        stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node<Real> *x, const Node<Real> *y) { return x->id > y->id; });

  for (Node<Real> *n : order) {
    if (!n->leaf)
      n->grad.assign(n->value.size(), Real(0));
  }
  node_->ensure_grad()[0] += Real(1);
  for (Node<Real> *n : order) {
    if (!n->leaf && n->backward)
      n->backward(*n);
  }
}

// ---------------------------------------------------------------- elementwise

template <typename Real> Tensor<Real> add(const Tensor<Real> &a, const Tensor<Real> &b) {
  return binary("add", a, b, BinaryKind::kAdd);
}

template <typename Real> Tensor<Real> sub(const Tensor<Real> &a, const Tensor<Real> &b) {
  return binary("sub", a, b, BinaryKind::kSub);
}

template <typename Real>
Tensor<Real> hadamard(const Tensor<Real> &a, const Tensor<Real> &b) {
  return binary("hadamard", a, b, BinaryKind::kMul);
}

template <typename Real> Tensor<Real> scale(const Tensor<Real> &a, Real s) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (Real &v : out)
    v *= s;
  return make_op<Real>("scale", a.shape(), std::move(out), {&a}, [s](Node<Real> &self) {
    auto &ga = parent(self, 0)->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] += s * self.grad[i];
  });
}

template <typename Real> Tensor<Real> add_scalar(const Tensor<Real> &a, Real s) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (Real &v : out)
    v += s;
  return make_op<Real>("add_scalar", a.shape(), std::move(out), {&a}, [](Node<Real> &self) {
    auto &ga = parent(self, 0)->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] += self.grad[i];
  });
}

template <typename Real> Tensor<Real> one_minus(const Tensor<Real> &a) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (Real &v : out)
    v = Real(1) - v;
  return make_op<Real>("one_minus", a.shape(), std::move(out), {&a}, [](Node<Real> &self) {
    auto &ga = parent(self, 0)->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] -= self.grad[i];
  });
}

// ---------------------------------------------------------------- linear algebra

template <typename Real>
Tensor<Real> matmul(const Tensor<Real> &a, const Tensor<Real> &b) {
  const Shape &sa = a.shape();
  const Shape &sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2 || sa[sa.size() - 1] != sb[sb.size() - 2])
    shape_error("matmul", sa, sb);
  const auto M = static_cast<Eigen::Index>(sa[sa.size() - 2]);
  const auto K = static_cast<Eigen::Index>(sa[sa.size() - 1]);
  const auto P = static_cast<Eigen::Index>(sb[sb.size() - 1]);

  if (sb.size() == 2) {
    // Shared right operand: fold all leading axes of `a` into rows.
    const auto rows = static_cast<Eigen::Index>(a.size() / static_cast<std::size_t>(K));
    Shape out_shape(sa.begin(), sa.end() - 1);
    out_shape.push_back(static_cast<std::size_t>(P));
    std::vector<Real> out(static_cast<std::size_t>(rows * P));
    MapR<Real>(out.data(), rows, P).noalias() =
        CMapR<Real>(a.data().data(), rows, K) * CMapR<Real>(b.data().data(), K, P);
    return make_op<Real>("matmul", std::move(out_shape), std::move(out), {&a, &b},
                         [rows, K, P](Node<Real> &self) {
      Node<Real> *pa = parent(self, 0);
      Node<Real> *pb = parent(self, 1);
      CMapR<Real> G(self.grad.data(), rows, P);
      if (pa->requires_grad)
        MapR<Real>(pa->ensure_grad().data(), rows, K).noalias() +=
            G * CMapR<Real>(pb->value.data(), K, P).transpose();
      if (pb->requires_grad)
        MapR<Real>(pb->ensure_grad().data(), K, P).noalias() +=
            CMapR<Real>(pa->value.data(), rows, K).transpose() * G;
    });
  }

  const bool shared_left = sa.size() == 2;
  if (!shared_left &&
      !std::equal(sa.begin(), sa.end() - 2, sb.begin(), sb.end() - 2))
    shape_error("matmul", sa, sb);
  if (!shared_left && sa.size() != sb.size())
    shape_error("matmul", sa, sb);
  const std::size_t batch = b.size() / static_cast<std::size_t>(K * P);
  Shape out_shape(sb.begin(), sb.end() - 2);
  out_shape.push_back(static_cast<std::size_t>(M));
  out_shape.push_back(static_cast<std::size_t>(P));
  std::vector<Real> out(batch * static_cast<std::size_t>(M * P));
  const std::size_t a_stride = shared_left ? 0 : static_cast<std::size_t>(M * K);
  const std::size_t b_stride = static_cast<std::size_t>(K * P);
  const std::size_t o_stride = static_cast<std::size_t>(M * P);
  for (std::size_t i = 0; i < batch; ++i) {
    MapR<Real>(out.data() + i * o_stride, M, P).noalias() =
        CMapR<Real>(a.data().data() + i * a_stride, M, K) *
        CMapR<Real>(b.data().data() + i * b_stride, K, P);
  }
  return make_op<Real>("matmul", std::move(out_shape), std::move(out), {&a, &b},
                       [=](Node<Real> &self) {
    Node<Real> *pa = parent(self, 0);
    Node<Real> *pb = parent(self, 1);
    for (std::size_t i = 0; i < batch; ++i) {
      CMapR<Real> G(self.grad.data() + i * o_stride, M, P);
      if (pa->requires_grad)
        MapR<Real>(pa->ensure_grad().data() + i * a_stride, M, K).noalias() +=
            G * CMapR<Real>(pb->value.data() + i * b_stride, K, P).transpose();
      if (pb->requires_grad)
        MapR<Real>(pb->ensure_grad().data() + i * b_stride, K, P).noalias() +=
            CMapR<Real>(pa->value.data() + i * a_stride, M, K).transpose() * G;
    }
  });
}

template <typename Real> Tensor<Real> transpose(const Tensor<Real> &a) {
  const Shape &s = a.shape();
  if (s.size() < 2)
    fail(ErrorCode::kShapeMismatch, "transpose: rank < 2 for " + shape_str(s));
  const std::size_t M = s[s.size() - 2], P = s[s.size() - 1];
  const std::size_t batch = a.size() / (M * P);
  Shape out_shape = s;
  std::swap(out_shape[s.size() - 2], out_shape[s.size() - 1]);
  std::vector<Real> out(a.size());
  const Real *src = a.data().data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < P; ++j)
        out[b * M * P + j * M + i] = src[b * M * P + i * P + j];
  return make_op<Real>("transpose", std::move(out_shape), std::move(out), {&a},
                       [batch, M, P](Node<Real> &self) {
    auto &ga = parent(self, 0)->ensure_grad();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < P; ++j)
          ga[b * M * P + i * P + j] += self.grad[b * M * P + j * M + i];
  });
}

template <typename Real> Tensor<Real> concat(const std::vector<Tensor<Real>> &parts) {
  if (parts.empty())
    fail(ErrorCode::kInvalidArgument, "concat: no inputs");
  const Shape &first = parts.front().shape();
  if (first.empty())
    fail(ErrorCode::kShapeMismatch, "concat: scalar input");
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto &p : parts) {
    const Shape &s = p.shape();
    if (s.size() != first.size() || !std::equal(s.begin(), s.end() - 1, first.begin()))
      shape_error("concat", first, s);
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = parts.front().size() / first.back();
  Shape out_shape = first;
  out_shape.back() = total;
  std::vector<Real> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Real *src = parts[k].data().data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src + r * widths[k], widths[k], out.data() + r * total + offset);
    offset += widths[k];
  }

  // make_op takes an initializer list; concat records its parents manually.
  Tensor<Real> result = make_op<Real>("concat", std::move(out_shape), std::move(out), {}, {});
  bool needs = false;
  if (grad_enabled())
    for (const auto &p : parts)
      needs = needs || p.requires_grad();
  if (needs) {
    auto &node = *result.node();
    node.requires_grad = true;
    for (const auto &p : parts)
      node.parents.push_back(p.node());
    node.backward = [widths, rows, total](Node<Real> &self) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        Node<Real> *p = self.parents[k].get();
        if (p->requires_grad) {
          auto &g = p->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < widths[k]; ++c)
              g[r * widths[k] + c] += self.grad[r * total + off + c];
        }
        off += widths[k];
      }
    };
  }
  return result;
}

template <typename Real>
Tensor<Real> broadcast_leading(const Tensor<Real> &a, std::size_t batch) {
  Shape out_shape{batch};
  out_shape.insert(out_shape.end(), a.shape().begin(), a.shape().end());
  const std::size_t n = a.size();
  std::vector<Real> out(batch * n);
  for (std::size_t b = 0; b < batch; ++b)
    std::copy(a.data().begin(), a.data().end(), out.begin() + static_cast<std::ptrdiff_t>(b * n));
  return make_op<Real>("broadcast_leading", std::move(out_shape), std::move(out), {&a},
                       [batch, n](Node<Real> &self) {
    auto &ga = parent(self, 0)->ensure_grad();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < n; ++i)
        ga[i] += self.grad[b * n + i];
  });
}

template <typename Real> Tensor<Real> reshape(const Tensor<Real> &a, Shape shape) {
  if (numel(shape) != a.size())
    shape_error("reshape", a.shape(), shape);
  std::vector<Real> out(a.data().begin(), a.data().end());
  return make_op<Real>("reshape", std::move(shape), std::move(out), {&a}, [](Node<Real> &self) {
    auto &ga = parent(self, 0)->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] += self.grad[i];
  });
}

template <typename Real>
Tensor<Real> select_rows(const Tensor<Real> &a, const std::vector<std::size_t> &rows) {
  const Shape &s = a.shape();
  if (s.size() < 2)
    fail(ErrorCode::kShapeMismatch, "select_rows: rank < 2 for " + shape_str(s));
  const std::size_t n = s[s.size() - 2], width = s.back();
  const std::size_t batch = a.size() / (n * width);
  for (const std::size_t r : rows)
    if (r >= n)
      fail(ErrorCode::kInvalidArgument, "select_rows: row " + std::to_string(r) +
                                            " out of range for " + shape_str(s));
  const std::size_t m = rows.size();
  Shape out_shape = s;
  out_shape[s.size() - 2] = m;
  std::vector<Real> out(batch * m * width);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t k = 0; k < m; ++k)
      std::copy_n(a.data().data() + (b * n + rows[k]) * width, width,
                  out.data() + (b * m + k) * width);
  return make_op<Real>("select_rows", std::move(out_shape), std::move(out), {&a},
                       [rows, n, m, width, batch](Node<Real> &self) {
    auto &ga = parent(self, 0)->ensure_grad();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t c = 0; c < width; ++c)
          ga[(b * n + rows[k]) * width + c] += self.grad[(b * m + k) * width + c];
  });
}

// ---------------------------------------------------------------- activations

template <typename Real>
Tensor<Real> activation(const Tensor<Real> &x, Activation kind, Real leaky_slope) {
  std::vector<Real> out(x.size());
  const Real *in = x.data().data();
  const char *name = "activation";
  switch (kind) {
  case Activation::kReLU:
    name = "relu";
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = in[i] > 0 ? in[i] : Real(0);
    break;
  case Activation::kGeLU:
    name = "gelu";
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = gelu_value(in[i]);
    break;
  case Activation::kELU:
    name = "elu";
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = in[i] > 0 ? in[i] : std::expm1(in[i]);
    break;
  case Activation::kLeakyReLU:
    name = "leaky_relu";
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = in[i] > 0 ? in[i] : leaky_slope * in[i];
    break;
  case Activation::kSigmoid:
    name = "sigmoid";
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = sigmoid_value(in[i]);
    break;
  }
  return make_op<Real>(name, x.shape(), std::move(out), {&x},
                       [kind, leaky_slope](Node<Real> &self) {
    Node<Real> *px = parent(self, 0);
    auto &gx = px->ensure_grad();
    const Real *in = px->value.data();
    const Real *y = self.value.data();
    const Real *g = self.grad.data();
    const std::size_t n = gx.size();
    switch (kind) {
    case Activation::kReLU:
      for (std::size_t i = 0; i < n; ++i)
        gx[i] += in[i] > 0 ? g[i] : Real(0);
      break;
    case Activation::kGeLU:
      for (std::size_t i = 0; i < n; ++i)
        gx[i] += g[i] * gelu_deriv(in[i]);
      break;
    case Activation::kELU:
      // d/dx (e^x - 1) = y + 1 on the negative branch
      for (std::size_t i = 0; i < n; ++i)
        gx[i] += g[i] * (in[i] > 0 ? Real(1) : y[i] + Real(1));
      break;
    case Activation::kLeakyReLU:
      for (std::size_t i = 0; i < n; ++i)
        gx[i] += g[i] * (in[i] > 0 ? Real(1) : leaky_slope);
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < n; ++i)
        gx[i] += g[i] * y[i] * (Real(1) - y[i]);
      break;
    }
  });
}

template <typename Real> Tensor<Real> relu(const Tensor<Real> &x) {
  return activation(x, Activation::kReLU);
}
template <typename Real> Tensor<Real> gelu(const Tensor<Real> &x) {
  return activation(x, Activation::kGeLU);
}
template <typename Real> Tensor<Real> elu(const Tensor<Real> &x) {
  return activation(x, Activation::kELU);
}
template <typename Real> Tensor<Real> leaky_relu(const Tensor<Real> &x, Real slope) {
  return activation(x, Activation::kLeakyReLU, slope);
}
template <typename Real> Tensor<Real> sigmoid(const Tensor<Real> &x) {
  return activation(x, Activation::kSigmoid);
}

template <typename Real> Tensor<Real> abs(const Tensor<Real> &x) {
  std::vector<Real> out(x.data().begin(), x.data().end());
  for (Real &v : out)
    v = std::abs(v);
  return make_op<Real>("abs", x.shape(), std::move(out), {&x}, [](Node<Real> &self) {
    Node<Real> *px = parent(self, 0);
    auto &gx = px->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const Real v = px->value[i];
      gx[i] += v > 0 ? self.grad[i] : (v < 0 ? -self.grad[i] : Real(0));
    }
  });
}

// ---------------------------------------------------------------- normalization

template <typename Real> Tensor<Real> softmax(const Tensor<Real> &x) {
  if (x.rank() == 0 || x.shape().back() == 0)
    fail(ErrorCode::kShapeMismatch, "softmax: empty last axis in " + shape_str(x.shape()));
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / width;
  std::vector<Real> out(x.size());
  const Real *in = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *row = in + r * width;
    Real *o = out.data() + r * width;
    const Real m = *std::max_element(row, row + width);
    Real total = 0;
    for (std::size_t j = 0; j < width; ++j) {
      o[j] = std::exp(row[j] - m);
      total += o[j];
    }
    for (std::size_t j = 0; j < width; ++j)
      o[j] /= total;
  }
  return make_op<Real>("softmax", x.shape(), std::move(out), {&x},
                       [rows, width](Node<Real> &self) {
    auto &gx = parent(self, 0)->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real *y = self.value.data() + r * width;
      const Real *g = self.grad.data() + r * width;
      Real dot = 0;
      for (std::size_t j = 0; j < width; ++j)
        dot += g[j] * y[j];
      for (std::size_t j = 0; j < width; ++j)
        gx[r * width + j] += y[j] * (g[j] - dot);
    }
  });
}

template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real> &x, const Tensor<Real> &gain,
                        const Tensor<Real> &bias, Real eps) {
  if (x.rank() == 0 || x.shape().back() == 0)
    fail(ErrorCode::kShapeMismatch, "layer_norm: empty last axis in " + shape_str(x.shape()));
  const std::size_t width = x.shape().back();
  if (gain.size() != width || bias.size() != width)
    shape_error("layer_norm", x.shape(), gain.shape());
  const std::size_t rows = x.size() / width;
  std::vector<Real> xhat(x.size());
  std::vector<Real> rstd(rows);
  std::vector<Real> out(x.size());
  const Real *in = x.data().data();
  const Real *g = gain.data().data();
  const Real *b = bias.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *row = in + r * width;
    Real mu = 0;
    for (std::size_t j = 0; j < width; ++j)
      mu += row[j];
    mu /= Real(width);
    Real var = 0;
    for (std::size_t j = 0; j < width; ++j)
      var += (row[j] - mu) * (row[j] - mu);
    var /= Real(width);
    rstd[r] = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t k = r * width + j;
      xhat[k] = (row[j] - mu) * rstd[r];
      out[k] = g[j] * xhat[k] + b[j];
    }
  }
  return make_op<Real>("layer_norm", x.shape(), std::move(out), {&x, &gain, &bias},
                       [rows, width, xhat = std::move(xhat), rstd = std::move(rstd)](Node<Real> &self) {
    Node<Real> *px = parent(self, 0);
    Node<Real> *pg = parent(self, 1);
    Node<Real> *pb = parent(self, 2);
    const Real *gout = self.grad.data();
    if (pg->requires_grad) {
      auto &gg = pg->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < width; ++j)
          gg[j] += gout[r * width + j] * xhat[r * width + j];
    }
    if (pb->requires_grad) {
      auto &gb = pb->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < width; ++j)
          gb[j] += gout[r * width + j];
    }
    if (px->requires_grad) {
      auto &gx = px->ensure_grad();
      const Real *gain = pg->value.data();
      for (std::size_t r = 0; r < rows; ++r) {
        Real mean_d = 0, mean_dx = 0;
        for (std::size_t j = 0; j < width; ++j) {
          const Real d = gout[r * width + j] * gain[j];
          mean_d += d;
          mean_dx += d * xhat[r * width + j];
        }
        mean_d /= Real(width);
        mean_dx /= Real(width);
        for (std::size_t j = 0; j < width; ++j) {
          const Real d = gout[r * width + j] * gain[j];
          gx[r * width + j] += rstd[r] * (d - mean_d - xhat[r * width + j] * mean_dx);
        }
      }
    }
  });
}

// ---------------------------------------------------------------- reductions

template <typename Real> Tensor<Real> sum(const Tensor<Real> &x) {
  Real total = 0;
  for (const Real v : x.data())
    total += v;
  return make_op<Real>("sum", Shape{}, std::vector<Real>{total}, {&x}, [](Node<Real> &self) {
    auto &gx = parent(self, 0)->ensure_grad();
    for (Real &v : gx)
      v += self.grad[0];
  });
}

template <typename Real> Tensor<Real> mean(const Tensor<Real> &x) {
  if (x.size() == 0)
    fail(ErrorCode::kShapeMismatch, "mean: empty tensor");
  Real total = 0;
  for (const Real v : x.data())
    total += v;
  const Real inv = Real(1) / Real(x.size());
  return make_op<Real>("mean", Shape{}, std::vector<Real>{total * inv}, {&x},
                       [inv](Node<Real> &self) {
    auto &gx = parent(self, 0)->ensure_grad();
    for (Real &v : gx)
      v += self.grad[0] * inv;
  });
}

// ---------------------------------------------------------------- attention

template <typename Real>
Tensor<Real> neighbor_attention(const Tensor<Real> &src, const Tensor<Real> &dst,
                                const Tensor<Real> &prior,
                                std::span<const std::uint8_t> pattern,
                                Real leaky_slope) {
  const Shape &s = src.shape();
  if (s.size() < 2 || s.back() != 1)
    fail(ErrorCode::kShapeMismatch,
         "neighbor_attention: scores must be [..., N, 1], got " + shape_str(s));
  const std::size_t N = s[s.size() - 2];
  const std::size_t batch = src.size() / N;
  if (pattern.size() != N * N)
    fail(ErrorCode::kShapeMismatch, "neighbor_attention: pattern is not N x N");
  const bool has_dst = dst.defined();
  const bool has_prior = prior.defined();
  if (has_dst && dst.shape() != s)
    shape_error("neighbor_attention", s, dst.shape());
  if (has_prior && prior.shape() != Shape{N, N})
    shape_error("neighbor_attention", Shape{N, N}, prior.shape());
  if (has_prior) {
    for (std::size_t k = 0; k < N * N; ++k)
      if (pattern[k] && !(prior.data()[k] > 0))
        fail(ErrorCode::kInvalidArgument, "neighbor_attention: prior must be positive");
  }

  Shape out_shape(s.begin(), s.end() - 1);
  out_shape.push_back(N);
  std::vector<Real> out(batch * N * N, Real(0));
  std::vector<Real> z(N);
  const Real *ps = src.data().data();
  const Real *pd = has_dst ? dst.data().data() : nullptr;
  const Real *pp = has_prior ? prior.data().data() : nullptr;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < N; ++i) {
      const std::uint8_t *row = pattern.data() + i * N;
      Real m = -std::numeric_limits<Real>::infinity();
      for (std::size_t j = 0; j < N; ++j) {
        if (!row[j])
          continue;
        Real u = ps[b * N + j] + (pd ? pd[b * N + i] : Real(0));
        u = u > 0 ? u : leaky_slope * u;
        z[j] = u + (pp ? std::log(pp[i * N + j]) : Real(0));
        m = std::max(m, z[j]);
      }
      if (!std::isfinite(m))
        continue;
      Real total = 0;
      Real *o = out.data() + (b * N + i) * N;
      for (std::size_t j = 0; j < N; ++j) {
        if (row[j]) {
          o[j] = std::exp(z[j] - m);
          total += o[j];
        }
      }
      for (std::size_t j = 0; j < N; ++j)
        o[j] /= total;
    }
  }

  std::vector<std::uint8_t> pat(pattern.begin(), pattern.end());
  return make_op<Real>("neighbor_attention", std::move(out_shape), std::move(out),
                       {&src, &dst, &prior},
                       [N, batch, has_dst, has_prior, leaky_slope,
                        pat = std::move(pat)](Node<Real> &self) {
    Node<Real> *psrc = parent(self, 0);
    Node<Real> *pdst = has_dst ? parent(self, 1) : nullptr;
    Node<Real> *pprior = has_prior ? parent(self, has_dst ? 2 : 1) : nullptr;
    Real *gs = psrc->requires_grad ? psrc->ensure_grad().data() : nullptr;
    Real *gd = pdst && pdst->requires_grad ? pdst->ensure_grad().data() : nullptr;
    Real *gp = pprior && pprior->requires_grad ? pprior->ensure_grad().data() : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < N; ++i) {
        const std::uint8_t *row = pat.data() + i * N;
        const Real *a = self.value.data() + (b * N + i) * N;
        const Real *g = self.grad.data() + (b * N + i) * N;
        Real dot = 0;
        for (std::size_t j = 0; j < N; ++j)
          if (row[j])
            dot += a[j] * g[j];
        for (std::size_t j = 0; j < N; ++j) {
          if (!row[j])
            continue;
          const Real gz = a[j] * (g[j] - dot);
          const Real u = psrc->value[b * N + j] + (pdst ? pdst->value[b * N + i] : Real(0));
          const Real du = u > 0 ? Real(1) : leaky_slope;
          if (gs)
            gs[b * N + j] += gz * du;
          if (gd)
            gd[b * N + i] += gz * du;
          if (gp)
            gp[i * N + j] += gz / pprior->value[i * N + j];
        }
      }
    }
  });
}

// ---------------------------------------------------------------- grad check

GradCheckReport grad_check(const std::function<Tensor<double>()> &f,
                           std::vector<std::pair<std::string, Tensor<double>>> params,
                           double eps, double tol) {
  for (auto &[name, p] : params)
    p.zero_grad();
  f().backward();
  std::vector<std::vector<double>> analytic;
  for (auto &[name, p] : params) {
    auto g = p.grad();
    analytic.emplace_back(g.begin(), g.end());
    analytic.back().resize(p.size(), 0.0);
  }

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto &p = params[k].second;
    GradCheckEntry entry{params[k].first, 0.0, 0.0};
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = f().item();
      values[i] = saved - eps;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double diff = std::abs(analytic[k][i] - numeric);
      entry.max_abs_error = std::max(entry.max_abs_error, diff);
      entry.max_rel_error =
          std::max(entry.max_rel_error, diff / std::max(1.0, std::abs(numeric)));
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

// ---------------------------------------------------------------- instantiation

#define GINAR_INSTANTIATE(Real)                                                          \
  template class Tensor<Real>;                                                          \
  template Tensor<Real> add(const Tensor<Real> &, const Tensor<Real> &);                \
  template Tensor<Real> sub(const Tensor<Real> &, const Tensor<Real> &);                \
  template Tensor<Real> hadamard(const Tensor<Real> &, const Tensor<Real> &);           \
  template Tensor<Real> scale(const Tensor<Real> &, Real);                              \
  template Tensor<Real> add_scalar(const Tensor<Real> &, Real);                         \
  template Tensor<Real> one_minus(const Tensor<Real> &);                                \
  template Tensor<Real> matmul(const Tensor<Real> &, const Tensor<Real> &);             \
  template Tensor<Real> transpose(const Tensor<Real> &);                                \
  template Tensor<Real> concat(const std::vector<Tensor<Real>> &);                      \
  template Tensor<Real> broadcast_leading(const Tensor<Real> &, std::size_t);           \
  template Tensor<Real> reshape(const Tensor<Real> &, Shape);                           \
  template Tensor<Real> select_rows(const Tensor<Real> &, const std::vector<std::size_t> &); \
  template Tensor<Real> activation(const Tensor<Real> &, Activation, Real);             \
  template Tensor<Real> relu(const Tensor<Real> &);                                     \
  template Tensor<Real> gelu(const Tensor<Real> &);                                     \
  template Tensor<Real> elu(const Tensor<Real> &);                                      \
  template Tensor<Real> leaky_relu(const Tensor<Real> &, Real);                         \
  template Tensor<Real> sigmoid(const Tensor<Real> &);                                  \
  template Tensor<Real> abs(const Tensor<Real> &);                                      \
  template Tensor<Real> softmax(const Tensor<Real> &);                                  \
  template Tensor<Real> layer_norm(const Tensor<Real> &, const Tensor<Real> &,          \
                                   const Tensor<Real> &, Real);                         \
  template Tensor<Real> sum(const Tensor<Real> &);                                      \
  template Tensor<Real> mean(const Tensor<Real> &);                                     \
  template Tensor<Real> neighbor_attention(const Tensor<Real> &, const Tensor<Real> &,  \
                                           const Tensor<Real> &,                        \
                                           std::span<const std::uint8_t>, Real);

GINAR_INSTANTIATE(float)
GINAR_INSTANTIATE(double)

#undef GINAR_INSTANTIATE

} // namespace ginar::ad
