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
 * @file nn.hpp
 * @brief Dense layers, classification losses, initialization, and SGD with
 *        polynomial learning-rate decay.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scal/errors.hpp"
#include "scal/rng.hpp"
#include "scal/tensor.hpp"

namespace scal::nn {

enum class Activation { relu, none };

/// One fully-connected layer: act(x W + b).
struct DenseLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
  Activation act = Activation::none;

  Tensor forward(const Tensor& x) const {
    Tensor y = add_rowvec(matmul(x, weight), bias);
    return act == Activation::relu ? relu(y) : y;
  }

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

/// A stack of dense layers.
struct Mlp {
  std::vector<DenseLayer> layers;

  Tensor forward(const Tensor& x) const {
    Tensor h = x;
    for (const auto& layer : layers) h = layer.forward(h);
    return h;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    out.reserve(layers.size() * 2);
    for (const auto& layer : layers) {
      out.push_back(layer.weight);
      out.push_back(layer.bias);
    }
    return out;
  }

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }

  /// Layer widths including the input dimension (d0, d1, ..., dL).
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    d.push_back(in_dim());
    for (const auto& layer : layers) d.push_back(layer.out_dim());
    return d;
  }
};

/// Builds dense layers for the dimension chain dims[0] -> ... -> dims[L].
/// Weights are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero,
/// bit-deterministic per seed. Hidden layers get `hidden_act`; the last
/// layer gets `output_act`.
inline Mlp init_params(const std::vector<std::size_t>& dims, std::uint64_t seed,
                       Activation hidden_act = Activation::relu,
                       Activation output_act = Activation::none) {
  if (dims.size() < 2)
    throw ContractError(detail::msg("init_params: need at least input and output dims, got ",
                                    dims.size()));
  Rng rng(seed);
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    std::size_t in = dims[l], out = dims[l + 1];
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    DenseLayer layer;
    layer.weight = Tensor({in, out}, std::move(w), true);
    layer.bias = Tensor::zeros({out}, true);
    layer.act = (l + 2 == dims.size()) ? output_act : hidden_act;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Mean of -log(probs[i, labels[i]]) over the batch. `probs` rows must be
/// probability vectors (softmax output).
inline Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  std::size_t n = probs.rows(), k = probs.cols();
  if (labels.size() != n)
    throw ContractError(detail::msg("cross_entropy: ", labels.size(), " labels for ", n,
                                    " rows"));
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
      throw ContractError(detail::msg("cross_entropy: label ", labels[i], " at row ", i,
                                      " outside [0, ", k, ")"));

  constexpr double kFloor = 1e-300;  // softmax never returns exact zero unless underflow
  const auto& pv = probs.values();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double p = pv[i * k + static_cast<std::size_t>(labels[i])];
    loss -= std::log(p < kFloor ? kFloor : p);
  }
  loss /= static_cast<double>(n);

  return Tensor::make_op(
      "cross_entropy", {1}, {loss}, {probs},
      [labels, n, k](detail::Node& node) {
        detail::Node& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        double g = node.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t idx = i * k + static_cast<std::size_t>(labels[i]);
          double pr = p.values[idx];
          p.grad[idx] -= g / (pr < kFloor ? kFloor : pr);
        }
      });
}

/// Domain-discrimination negative log likelihood: the mean of -log p over
/// source rows plus the mean of -log(1 - p) over target rows, for p the
/// discriminator's sigmoid outputs on an [n x 1] batch.
///
/// Probabilities are clamped 1e-7 away from {0, 1}; the clamp is treated as
/// identity in backward so the gradient stays finite but directed. The
/// number of clamped entries is reported through `clamped` when given, so
/// the training loop can log boundary saturation instead of crashing on it.
inline Tensor binary_adversarial_loss(const Tensor& probs,
                                      const std::vector<bool>& is_source,
                                      std::size_t* clamped = nullptr) {
  std::size_t n = probs.rows();
  if (probs.cols() != 1)
    throw ShapeError(detail::msg("binary_adversarial_loss: expected [n x 1] probabilities, got ",
                                 detail::shape_str(probs.shape())));
  if (is_source.size() != n)
    throw ContractError(detail::msg("binary_adversarial_loss: ", is_source.size(),
                                    " domain flags for ", n, " rows"));
  std::size_t n_src = 0;
  for (bool b : is_source) n_src += b ? 1 : 0;
  std::size_t n_tgt = n - n_src;
  if (n_src == 0 || n_tgt == 0)
    throw ContractError("binary_adversarial_loss: batch needs both domains");

  constexpr double kEps = 1e-7;
  const auto& pv = probs.values();
  std::vector<double> q(n);
  std::size_t clamp_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double p = pv[i];
    double c = std::min(std::max(p, kEps), 1.0 - kEps);
    if (c != p) ++clamp_count;
    q[i] = c;
  }
  if (clamped) *clamped = clamp_count;

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    loss += is_source[i] ? -std::log(q[i]) / static_cast<double>(n_src)
                         : -std::log(1.0 - q[i]) / static_cast<double>(n_tgt);

  return Tensor::make_op(
      "binary_adversarial_loss", {1}, {loss}, {probs},
      [is_source, q, n_src, n_tgt](detail::Node& node) {
        detail::Node& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        double g = node.grad[0];
        for (std::size_t i = 0; i < q.size(); ++i) {
          if (is_source[i])
            p.grad[i] += g * (-1.0 / q[i]) / static_cast<double>(n_src);
          else
            p.grad[i] += g * (1.0 / (1.0 - q[i])) / static_cast<double>(n_tgt);
        }
      });
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Decayed learning rate eta0 * (1 + alpha*p)^(-beta) for training progress
/// p in [0, 1].
inline double lr_at(double p, double eta0, double alpha, double beta) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ContractError(detail::msg("lr_at: progress ", p, " outside [0, 1]"));
  if (!(eta0 > 0.0)) throw ContractError("lr_at: eta0 must be positive");
  if (alpha < 0.0 || beta < 0.0)
    throw ContractError("lr_at: alpha and beta must be nonnegative");
  return eta0 * std::pow(1.0 + alpha * p, -beta);
}

/// Named parameter group with a relative learning-rate multiplier
/// (classifier heads train faster than the feature extractor).
struct ParamGroup {
  std::string name;
  std::vector<Tensor> params;
  double lr_mult = 1.0;
};

/// Classic momentum SGD over named parameter groups:
///   v <- momentum * v + g;  theta <- theta - lr(p) * mult * v.
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<ParamGroup> groups, double momentum, double eta0,
               double alpha, double beta)
      : groups_(std::move(groups)),
        momentum_(momentum),
        eta0_(eta0),
        alpha_(alpha),
        beta_(beta) {
    velocity_.resize(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      velocity_[gi].resize(groups_[gi].params.size());
      for (std::size_t pi = 0; pi < groups_[gi].params.size(); ++pi)
        velocity_[gi][pi].assign(groups_[gi].params[pi].size(), 0.0);
    }
  }

  std::size_t group_count() const { return groups_.size(); }
  const ParamGroup& group(std::size_t i) const { return groups_[i]; }

  void zero_grad() {
    for (auto& g : groups_)
      for (auto& p : g.params) p.zero_grad();
  }

  /// Applies one momentum step to the named groups at training progress p.
  /// Parameters whose grad was never populated are skipped (their velocity
  /// also stays untouched).
  void step(const std::vector<std::string>& group_names, double p) {
    double lr = lr_at(p, eta0_, alpha_, beta_);
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& group = groups_[gi];
      bool selected = false;
      for (const auto& name : group_names) selected = selected || name == group.name;
      if (!selected) continue;
      for (std::size_t pi = 0; pi < group.params.size(); ++pi) {
        Tensor& param = group.params[pi];
        if (!param.has_grad()) continue;
        const auto& grad = param.grad();
        auto& vel = velocity_[gi][pi];
        auto& vals = param.values_mut();
        for (std::size_t i = 0; i < vals.size(); ++i) {
          if (!std::isfinite(grad[i]))
            throw DivergenceError(detail::msg("non-finite gradient in parameter group '",
                                              group.name, "' (param ", pi, ", entry ", i,
                                              ")"));
          vel[i] = momentum_ * vel[i] + grad[i];
          vals[i] -= lr * group.lr_mult * vel[i];
        }
      }
    }
  }

  const std::vector<std::vector<std::vector<double>>>& velocities() const {
    return velocity_;
  }
  std::vector<std::vector<std::vector<double>>>& velocities_mut() { return velocity_; }

  double momentum() const { return momentum_; }
  double eta0() const { return eta0_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  std::vector<ParamGroup> groups_;
  double momentum_, eta0_, alpha_, beta_;
  // velocity_[group][param][entry], shapes mirror the parameters
  std::vector<std::vector<std::vector<double>>> velocity_;
};

}  // namespace scal::nn
