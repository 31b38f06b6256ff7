/*
 * Copyright 2026 SCAL Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file tensor.hpp
 * @brief Dense 64-bit tensors with tape-based reverse-mode differentiation.
 *
 * The tape is rebuilt on every forward pass: each operation allocates a node
 * holding its inputs and a backward closure. backward() from a scalar output
 * walks the DAG once in reverse topological order and accumulates gradients
 * into every participating tensor that requires them. Gradients are never
 * cleared implicitly; callers zero them before each backward pass.
 *
 * Broadcasting is limited to scalar-with-tensor and equal shapes.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "scal/errors.hpp"

namespace scal {

using Shape = std::vector<std::size_t>;

namespace detail {

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One tape entry: the forward result plus everything the local derivative
/// needs (inputs and a backward closure over cached intermediates).
struct Node {
  std::string op = "leaf";
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a backward pass touches this node
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// True when new operations record themselves on the tape.
inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// RAII scope that suppresses tape recording (metric probes, feature
/// snapshots for clustering).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Dense n-dimensional value with optional gradient-tape participation.
/// Copying is cheap and shares the underlying node.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false) {
    if (shape.empty())
      throw ShapeError("tensor shape must have at least one dimension");
    for (std::size_t d : shape)
      if (d == 0)
        throw ShapeError(detail::msg("tensor shape ", detail::shape_str(shape),
                                     " has a zero dimension"));
    if (detail::shape_numel(shape) != values.size()) {
      throw ShapeError(detail::msg("tensor shape ", detail::shape_str(shape),
                                   " does not match value count ", values.size()));
    }
    node_ = std::make_shared<detail::Node>();
    node_->shape = std::move(shape);
    node_->values = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return Tensor({1}, {v}, requires_grad);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<double> v(detail::shape_numel(shape), 0.0);
    return Tensor(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor from_rows(const std::vector<std::vector<double>>& rows,
                          bool requires_grad = false) {
    if (rows.empty()) throw ShapeError("from_rows: no rows given");
    std::size_t cols = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.size() != cols)
        throw ShapeError(detail::msg("from_rows: ragged row of length ", r.size(),
                                     ", expected ", cols));
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), cols}, std::move(flat), requires_grad);
  }

  bool defined() const { return node_ != nullptr; }

  const Shape& shape() const { return checked()->shape; }
  std::size_t size() const { return checked()->values.size(); }

  std::size_t rows() const {
    require_2d("rows()");
    return node_->shape[0];
  }
  std::size_t cols() const {
    require_2d("cols()");
    return node_->shape[1];
  }

  double item() const {
    if (size() != 1)
      throw ContractError(detail::msg("item() on non-scalar tensor of shape ",
                                      detail::shape_str(shape())));
    return node_->values[0];
  }

  double at(std::size_t r, std::size_t c) const {
    require_2d("at()");
    return node_->values[r * node_->shape[1] + c];
  }

  const std::vector<double>& values() const { return checked()->values; }

  /// Mutable access to leaf values (optimizer updates, finite-difference
  /// probes). Mutating interior nodes of a live tape is undefined.
  std::vector<double>& values_mut() { return checked()->values; }

  bool requires_grad() const { return checked()->requires_grad; }
  bool has_grad() const { return checked()->grad.size() == node_->values.size(); }

  const std::vector<double>& grad() const {
    if (!has_grad())
      throw ContractError("grad() requested before any backward pass populated it");
    return node_->grad;
  }

  void zero_grad() {
    checked()->grad.assign(node_->values.size(), 0.0);
  }

  /// A new leaf holding a copy of the values, detached from the tape.
  Tensor detach() const {
    return Tensor(shape(), values(), false);
  }

  /// Reverse pass from this (scalar) output. Accumulates into the grad of
  /// every reachable tensor with requires_grad; callers zero grads first.
  void backward() const {
    if (size() != 1)
      throw ContractError(detail::msg("backward() requires a scalar output, got shape ",
                                      detail::shape_str(shape())));
    if (!node_->requires_grad) return;

    std::vector<detail::Node*> order;
    topo_sort(node_.get(), order);
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      detail::Node* n = *it;
      if (n->backward_fn) n->backward_fn(*n);
    }
  }

  const std::string& op() const { return checked()->op; }

  /// Stable identity of the underlying node (for parameter registries).
  const void* id() const { return node_.get(); }

  detail::NodePtr node() const { return node_; }

  /// Builds a tensor from an already-computed forward result. `backward`
  /// receives the output node and accumulates into its parents' grads; it is
  /// dropped entirely when no input participates in the tape.
  static Tensor make_op(std::string op, Shape shape, std::vector<double> values,
                        std::vector<Tensor> inputs,
                        std::function<void(detail::Node&)> backward) {
    Tensor out(std::move(shape), std::move(values), false);
    out.node_->op = std::move(op);
    bool rg = false;
    if (grad_enabled()) {
      for (const auto& t : inputs) rg = rg || t.checked()->requires_grad;
    }
    if (rg) {
      out.node_->requires_grad = true;
      out.node_->parents.reserve(inputs.size());
      for (auto& t : inputs) out.node_->parents.push_back(t.node_);
      out.node_->backward_fn = std::move(backward);
    }
    return out;
  }

 private:
  const detail::NodePtr& checked() const {
    if (!node_) throw ContractError("operation on default-constructed (empty) tensor");
    return node_;
  }

  void require_2d(const char* what) const {
    if (checked()->shape.size() != 2)
      throw ContractError(detail::msg(what, " requires a 2-D tensor, got shape ",
                                      detail::shape_str(node_->shape)));
  }

  static void topo_sort(detail::Node* root, std::vector<detail::Node*>& order) {
    // Iterative DFS; each node appears once even when shared by several
    // consumers, so backward visits it exactly once.
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
      auto& [n, next_child] = stack.back();
      if (next_child < n->parents.size()) {
        detail::Node* child = n->parents[next_child++].get();
        if (child->requires_grad && seen.insert(child).second) {
          stack.emplace_back(child, 0);
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }

  detail::NodePtr node_;
};

// ---------------------------------------------------------------------------
// Elementwise operations
// ---------------------------------------------------------------------------

enum class EwOp { add, sub, mul, div, exp, log, relu, neg, scale };

namespace detail {

inline const char* ew_name(EwOp op) {
  switch (op) {
    case EwOp::add: return "add";
    case EwOp::sub: return "sub";
    case EwOp::mul: return "mul";
    case EwOp::div: return "div";
    case EwOp::exp: return "exp";
    case EwOp::log: return "log";
    case EwOp::relu: return "relu";
    case EwOp::neg: return "neg";
    case EwOp::scale: return "scale";
  }
  return "?";
}

inline bool is_unary(EwOp op) {
  return op == EwOp::exp || op == EwOp::log || op == EwOp::relu || op == EwOp::neg;
}

// Equal shapes pass through; otherwise exactly one side must be scalar.
inline void check_broadcast(EwOp op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return;
  if (a.size() == 1 || b.size() == 1) return;
  throw ShapeError(msg(ew_name(op), ": shapes ", shape_str(a.shape()), " and ",
                       shape_str(b.shape()),
                       " are neither equal nor scalar-broadcastable"));
}

// Accumulate an output-shaped gradient into a possibly-scalar operand.
inline void scatter_grad(Node& parent, const std::vector<double>& g) {
  parent.ensure_grad();
  if (parent.values.size() == 1 && g.size() != 1) {
    double s = 0.0;
    for (double v : g) s += v;
    parent.grad[0] += s;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) parent.grad[i] += g[i];
  }
}

// Value of operand `p` at output index i under the scalar/equal broadcast.
inline double bval(const Node& p, std::size_t i) {
  return p.values.size() == 1 ? p.values[0] : p.values[i];
}

}  // namespace detail

/// Binary elementwise arithmetic under scalar/equal-shape broadcasting.
inline Tensor elementwise(EwOp op, const Tensor& a, const Tensor& b) {
  if (detail::is_unary(op))
    throw ContractError(detail::msg(detail::ew_name(op), " is unary, one operand expected"));
  detail::check_broadcast(op, a, b);

  const Shape& out_shape = a.size() >= b.size() ? a.shape() : b.shape();
  std::size_t n = detail::shape_numel(out_shape);
  const auto& av = a.values();
  const auto& bv = b.values();
  auto aval = [&](std::size_t i) { return av.size() == 1 ? av[0] : av[i]; };
  auto bval = [&](std::size_t i) { return bv.size() == 1 ? bv[0] : bv[i]; };

  std::vector<double> out(n);
  switch (op) {
    case EwOp::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = aval(i) + bval(i);
      break;
    case EwOp::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = aval(i) - bval(i);
      break;
    case EwOp::mul:
    case EwOp::scale:
      for (std::size_t i = 0; i < n; ++i) out[i] = aval(i) * bval(i);
      break;
    case EwOp::div:
      for (std::size_t i = 0; i < n; ++i) {
        if (bval(i) == 0.0)
          throw NumericDomainError("div: division by zero");
        out[i] = aval(i) / bval(i);
      }
      break;
    default:
      break;
  }

  return Tensor::make_op(
      detail::ew_name(op), out_shape, std::move(out), {a, b},
      [op](detail::Node& node) {
        detail::Node& pa = *node.parents[0];
        detail::Node& pb = *node.parents[1];
        std::size_t n = node.values.size();
        std::vector<double> ga(n), gb(n);
        for (std::size_t i = 0; i < n; ++i) {
          double g = node.grad[i];
          double x = detail::bval(pa, i);
          double y = detail::bval(pb, i);
          switch (op) {
            case EwOp::add:
              ga[i] = g;
              gb[i] = g;
              break;
            case EwOp::sub:
              ga[i] = g;
              gb[i] = -g;
              break;
            case EwOp::mul:
            case EwOp::scale:
              ga[i] = g * y;
              gb[i] = g * x;
              break;
            case EwOp::div:
              ga[i] = g / y;
              gb[i] = -g * x / (y * y);
              break;
            default:
              break;
          }
        }
        if (pa.requires_grad) detail::scatter_grad(pa, ga);
        if (pb.requires_grad) detail::scatter_grad(pb, gb);
      });
}

/// Unary elementwise math.
inline Tensor elementwise(EwOp op, const Tensor& a) {
  if (!detail::is_unary(op))
    throw ContractError(detail::msg(detail::ew_name(op), " is binary, two operands expected"));

  const auto& av = a.values();
  std::size_t n = av.size();
  std::vector<double> out(n);
  switch (op) {
    case EwOp::exp:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(av[i]);
      break;
    case EwOp::log:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(av[i] > 0.0))
          throw NumericDomainError(detail::msg("log: nonpositive input ", av[i]));
        out[i] = std::log(av[i]);
      }
      break;
    case EwOp::relu:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
      break;
    case EwOp::neg:
      for (std::size_t i = 0; i < n; ++i) out[i] = -av[i];
      break;
    default:
      break;
  }

  return Tensor::make_op(
      detail::ew_name(op), a.shape(), std::move(out), {a},
      [op](detail::Node& node) {
        detail::Node& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        std::size_t n = node.values.size();
        for (std::size_t i = 0; i < n; ++i) {
          double g = node.grad[i];
          switch (op) {
            case EwOp::exp:
              p.grad[i] += g * node.values[i];
              break;
            case EwOp::log:
              p.grad[i] += g / p.values[i];
              break;
            case EwOp::relu:
              p.grad[i] += p.values[i] > 0.0 ? g : 0.0;
              break;
            case EwOp::neg:
              p.grad[i] -= g;
              break;
            default:
              break;
          }
        }
      });
}

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(EwOp::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(EwOp::sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(EwOp::mul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(EwOp::div, a, b); }
inline Tensor exp(const Tensor& a) { return elementwise(EwOp::exp, a); }
inline Tensor log(const Tensor& a) { return elementwise(EwOp::log, a); }
inline Tensor relu(const Tensor& a) { return elementwise(EwOp::relu, a); }
inline Tensor neg(const Tensor& a) { return elementwise(EwOp::neg, a); }
inline Tensor scale(const Tensor& a, double c) {
  return elementwise(EwOp::scale, a, Tensor::scalar(c));
}

// ---------------------------------------------------------------------------
// Matrix and reduction operations
// ---------------------------------------------------------------------------

/// Standard matrix product [m x k] * [k x n] -> [m x n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2)
    throw ShapeError(detail::msg("matmul: expected 2-D operands, got ",
                                 detail::shape_str(a.shape()), " and ",
                                 detail::shape_str(b.shape())));
  std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2)
    throw ShapeError(detail::msg("matmul: inner dimensions disagree, ",
                                 detail::shape_str(a.shape()), " vs ",
                                 detail::shape_str(b.shape())));

  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double x = av[i * k + p];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += x * bv[p * n + j];
    }

  return Tensor::make_op(
      "matmul", {m, n}, std::move(out), {a, b},
      [m, k, n](detail::Node& node) {
        detail::Node& pa = *node.parents[0];
        detail::Node& pb = *node.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();  // dA += dC * B^T
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              double g = node.grad[i * n + j];
              if (g == 0.0) continue;
              for (std::size_t p = 0; p < k; ++p)
                pa.grad[i * k + p] += g * pb.values[p * n + j];
            }
        }
        if (pb.requires_grad) {
          pb.ensure_grad();  // dB += A^T * dC
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double x = pa.values[i * k + p];
              if (x == 0.0) continue;
              for (std::size_t j = 0; j < n; ++j)
                pb.grad[p * n + j] += x * node.grad[i * n + j];
            }
        }
      });
}

/// Adds a length-d vector to every row of an [n x d] matrix.
inline Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  std::size_t rows = m.rows(), cols = m.cols();
  if (v.size() != cols)
    throw ShapeError(detail::msg("add_rowvec: matrix ", detail::shape_str(m.shape()),
                                 " with vector of length ", v.size()));
  const auto& mv = m.values();
  const auto& vv = v.values();
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = mv[i * cols + j] + vv[j];

  return Tensor::make_op(
      "add_rowvec", m.shape(), std::move(out), {m, v},
      [rows, cols](detail::Node& node) {
        detail::Node& pm = *node.parents[0];
        detail::Node& pv = *node.parents[1];
        if (pm.requires_grad) {
          pm.ensure_grad();
          for (std::size_t i = 0; i < rows * cols; ++i) pm.grad[i] += node.grad[i];
        }
        if (pv.requires_grad) {
          pv.ensure_grad();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) pv.grad[j] += node.grad[i * cols + j];
        }
      });
}

/// Sum of all entries -> scalar.
inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return Tensor::make_op(
      "sum", {1}, {s}, {a},
      [](detail::Node& node) {
        detail::Node& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        double g = node.grad[0];
        for (std::size_t i = 0; i < p.values.size(); ++i) p.grad[i] += g;
      });
}

/// Mean of all entries -> scalar.
inline Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

/// Stacks two matrices with equal column counts, a's rows first.
inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
  std::size_t cols = a.cols();
  if (b.cols() != cols)
    throw ShapeError(detail::msg("concat_rows: column mismatch, ",
                                 detail::shape_str(a.shape()), " vs ",
                                 detail::shape_str(b.shape())));
  std::size_t ra = a.rows(), rb = b.rows();
  std::vector<double> out;
  out.reserve((ra + rb) * cols);
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());

  return Tensor::make_op(
      "concat_rows", {ra + rb, cols}, std::move(out), {a, b},
      [ra, cols](detail::Node& node) {
        detail::Node& pa = *node.parents[0];
        detail::Node& pb = *node.parents[1];
        std::size_t split = ra * cols;
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (std::size_t i = 0; i < split; ++i) pa.grad[i] += node.grad[i];
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t i = 0; i < pb.values.size(); ++i)
            pb.grad[i] += node.grad[split + i];
        }
      });
}

// ---------------------------------------------------------------------------
// Nonlinearities used by the classifier heads
// ---------------------------------------------------------------------------

/// Row-wise max-subtracted softmax on [n x K] logits.
inline Tensor softmax_rows(const Tensor& logits) {
  std::size_t n = logits.rows(), k = logits.cols();
  if (k < 2)
    throw ContractError(detail::msg("softmax_rows: need at least 2 columns, got ", k));
  const auto& lv = logits.values();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = lv[i * k];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, lv[i * k + j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double e = std::exp(lv[i * k + j] - mx);
      out[i * k + j] = e;
      denom += e;
    }
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= denom;
  }

  return Tensor::make_op(
      "softmax", logits.shape(), std::move(out), {logits},
      [n, k](detail::Node& node) {
        detail::Node& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        // dl_j = s_j * (g_j - sum_i g_i s_i), row by row.
        for (std::size_t i = 0; i < n; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < k; ++j)
            dot += node.grad[i * k + j] * node.values[i * k + j];
          for (std::size_t j = 0; j < k; ++j) {
            double s = node.values[i * k + j];
            p.grad[i * k + j] += s * (node.grad[i * k + j] - dot);
          }
        }
      });
}

/// Numerically stable logistic sigmoid.
inline Tensor sigmoid(const Tensor& x) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    double v = xv[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
  }
  return Tensor::make_op(
      "sigmoid", x.shape(), std::move(out), {x},
      [](detail::Node& node) {
        detail::Node& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < node.values.size(); ++i) {
          double s = node.values[i];
          p.grad[i] += node.grad[i] * s * (1.0 - s);
        }
      });
}

// ---------------------------------------------------------------------------
// Conditioning and adversarial primitives
// ---------------------------------------------------------------------------

/// Row-wise flattened outer product: [n x N], [n x K] -> [n x N*K] with
/// entry (i, a*K + b) = g[i,a] * f[i,b]. Differentiable through both inputs.
inline Tensor row_outer(const Tensor& g, const Tensor& f) {
  std::size_t n = g.rows(), nd = g.cols();
  if (f.rows() != n)
    throw ShapeError(detail::msg("row_outer: row counts disagree, ",
                                 detail::shape_str(g.shape()), " vs ",
                                 detail::shape_str(f.shape())));
  std::size_t kd = f.cols();
  const auto& gv = g.values();
  const auto& fv = f.values();
  std::vector<double> out(n * nd * kd);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < nd; ++a) {
      double x = gv[i * nd + a];
      for (std::size_t b = 0; b < kd; ++b)
        out[(i * nd + a) * kd + b] = x * fv[i * kd + b];
    }

  return Tensor::make_op(
      "row_outer", {n, nd * kd}, std::move(out), {g, f},
      [n, nd, kd](detail::Node& node) {
        detail::Node& pg = *node.parents[0];
        detail::Node& pf = *node.parents[1];
        if (pg.requires_grad) pg.ensure_grad();
        if (pf.requires_grad) pf.ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t a = 0; a < nd; ++a)
            for (std::size_t b = 0; b < kd; ++b) {
              double g = node.grad[(i * nd + a) * kd + b];
              if (g == 0.0) continue;
              if (pg.requires_grad) pg.grad[i * nd + a] += g * pf.values[i * kd + b];
              if (pf.requires_grad) pf.grad[i * kd + b] += g * pg.values[i * nd + a];
            }
      });
}

/// Identity forward; backward multiplies the upstream gradient by -lambda.
/// Placing this between features and a domain discriminator turns one
/// backward pass into a minimax update.
inline Tensor gradient_reverse(const Tensor& x, double lambda) {
  return Tensor::make_op(
      "gradient_reverse", x.shape(), x.values(), {x},
      [lambda](detail::Node& node) {
        detail::Node& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < node.values.size(); ++i)
          p.grad[i] += -lambda * node.grad[i];
      });
}

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

/// Compares every backward-pass gradient entry of `fn` (a scalar-valued
/// function of the given leaf tensors) against central finite differences
/// and returns the worst error, measured as |analytic - numeric| divided by
/// max(1, |analytic|, |numeric|).
///
/// The check must be invoked on a true objective: gradient_reverse
/// deliberately reports the negated-and-scaled gradient, so a function that
/// routes through it will (correctly) fail the comparison.
inline double check_gradients(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                              std::vector<Tensor> inputs, double step) {
  if (!(step > 0.0)) throw ContractError("check_gradients: step must be positive");

  Tensor out = fn(inputs);
  if (out.size() != 1)
    throw ContractError(detail::msg("check_gradients: fn must return a scalar, got shape ",
                                    detail::shape_str(out.shape())));

  bool any = false;
  for (auto& t : inputs)
    if (t.requires_grad()) {
      t.zero_grad();
      any = true;
    }
  if (!any) throw ContractError("check_gradients: no input requires a gradient");
  out.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& t : inputs)
    analytic.push_back(t.requires_grad() ? t.grad() : std::vector<double>());

  double worst = 0.0;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    if (!inputs[ti].requires_grad()) continue;
    auto& vals = inputs[ti].values_mut();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      double keep = vals[i];
      double fp, fm;
      {
        NoGradGuard ng;  // perturbed evaluations only need values
        vals[i] = keep + step;
        fp = fn(inputs).item();
        vals[i] = keep - step;
        fm = fn(inputs).item();
        vals[i] = keep;
      }
      double numeric = (fp - fm) / (2.0 * step);
      double a = analytic[ti][i];
      double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace scal
