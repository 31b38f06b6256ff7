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
 * @file metrics.hpp
 * @brief Evaluation analytics: accuracies, proxy A-distance between feature
 *        distributions, ideal-joint-hypothesis target error, and
 *        decision-boundary exports. Probe networks are fresh and locally
 *        owned; nothing here mutates the model under evaluation.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scal/errors.hpp"
#include "scal/nn.hpp"
#include "scal/rng.hpp"
#include "scal/tensor.hpp"

namespace scal::metrics {

/// Per-epoch training record plus terminal analyses of one run.
struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss_cls = 0.0;
  double loss_adv = 0.0;
  double acc_target_fs = 0.0;
  double acc_target_f = 0.0;
  double acc_pseudo = 0.0;
};

struct MetricsLog {
  std::vector<EpochRecord> epochs;
  std::optional<double> a_distance;
  std::optional<double> ideal_joint_error;

  /// Fixed-header CSV, one row per epoch, 17-significant-digit floats so
  /// identical runs serialize byte-identically.
  std::string to_csv() const {
    std::ostringstream out;
    out << "epoch,lr,loss_cls,loss_adv,acc_target_fs,acc_target_f,acc_pseudo\n";
    char buf[40];
    auto put = [&](double v, char sep) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << sep;
    };
    for (const auto& r : epochs) {
      out << r.epoch << ",";
      put(r.lr, ',');
      put(r.loss_cls, ',');
      put(r.loss_adv, ',');
      put(r.acc_target_fs, ',');
      put(r.acc_target_f, ',');
      put(r.acc_pseudo, '\n');
    }
    return out.str();
  }
};

/// Fraction of exact matches between two equally long label lists.
inline double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw ContractError(detail::msg("accuracy: ", predictions.size(), " predictions vs ",
                                    labels.size(), " labels"));
  if (predictions.empty()) throw ContractError("accuracy: empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

/// Row-wise argmax of a logits/probability matrix.
inline std::vector<int> argmax_rows(const Tensor& m) {
  std::size_t n = m.rows(), k = m.cols();
  const auto& v = m.values();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (v[i * k + j] > v[i * k + best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

namespace detail_metrics {

// Column-standardizes features (statistics from the rows listed in
// `fit_rows`), which keeps the probe optimizers well-conditioned no matter
// how the feature scale drifted during training.
struct Standardizer {
  std::vector<double> mean, inv_std;

  static Standardizer fit(const Tensor& feats, const std::vector<std::size_t>& fit_rows) {
    std::size_t d = feats.cols();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.inv_std.assign(d, 1.0);
    const auto& v = feats.values();
    for (std::size_t r : fit_rows)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += v[r * d + j];
    for (double& m : s.mean) m /= static_cast<double>(fit_rows.size());
    std::vector<double> var(d, 0.0);
    for (std::size_t r : fit_rows)
      for (std::size_t j = 0; j < d; ++j) {
        double c = v[r * d + j] - s.mean[j];
        var[j] += c * c;
      }
    for (std::size_t j = 0; j < d; ++j) {
      double sd = std::sqrt(var[j] / static_cast<double>(fit_rows.size()));
      s.inv_std[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    return s;
  }

  Tensor apply(const Tensor& feats, const std::vector<std::size_t>& rows) const {
    std::size_t d = feats.cols();
    const auto& v = feats.values();
    std::vector<double> out(rows.size() * d);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        out[i * d + j] = (v[rows[i] * d + j] - mean[j]) * inv_std[j];
    return Tensor({rows.size(), d}, std::move(out));
  }
};

inline Tensor stack_features(const Tensor& a, const Tensor& b) {
  std::vector<double> flat = a.values();
  flat.insert(flat.end(), b.values().begin(), b.values().end());
  return Tensor({a.rows() + b.rows(), a.cols()}, std::move(flat));
}

}  // namespace detail_metrics

/// Proxy A-distance between two feature sets: trains a fresh width-16
/// domain discriminator on a `split` fraction of the pooled domain-labeled
/// features and returns 2 * (1 - 2 * err) on the held-out rest, clamped to
/// [0, 2]. Deterministic per seed.
inline double proxy_a_distance(const Tensor& source_features, const Tensor& target_features,
                               double split, std::uint64_t seed) {
  if (!(split > 0.0 && split < 1.0))
    throw ContractError(detail::msg("proxy_a_distance: split ", split, " outside (0, 1)"));
  if (source_features.cols() != target_features.cols())
    throw ShapeError(detail::msg("proxy_a_distance: feature dims ", source_features.cols(),
                                 " vs ", target_features.cols()));

  std::size_t n_s = source_features.rows(), n_t = target_features.rows();
  std::size_t n = n_s + n_t;
  Tensor pooled = detail_metrics::stack_features(source_features, target_features);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng split_rng(Rng::child_seed(seed, "pad-split"));
  split_rng.shuffle(order);

  std::size_t n_train = std::max<std::size_t>(2, static_cast<std::size_t>(
                                                     std::floor(split * static_cast<double>(n))));
  if (n_train >= n) n_train = n - 1;
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_rows(order.begin() + n_train, order.end());

  auto standardizer = detail_metrics::Standardizer::fit(pooled, train_rows);
  Tensor x_train = standardizer.apply(pooled, train_rows);
  Tensor x_test = standardizer.apply(pooled, test_rows);
  auto domain_of = [n_s](std::size_t row) { return row < n_s; };  // true = source
  std::vector<bool> y_train(n_train);
  for (std::size_t i = 0; i < n_train; ++i) y_train[i] = domain_of(train_rows[i]);

  nn::Mlp probe = nn::init_params({pooled.cols(), 16, 1}, Rng::child_seed(seed, "pad-init"));
  nn::SgdOptimizer opt({{"probe", probe.parameters(), 1.0}}, 0.9, 0.1, 0.0, 0.0);
  for (int epoch = 0; epoch < 200; ++epoch) {
    opt.zero_grad();
    Tensor p = sigmoid(probe.forward(x_train));
    Tensor loss = nn::binary_adversarial_loss(p, y_train);
    loss.backward();
    opt.step({"probe"}, 0.0);
  }

  double err;
  {
    NoGradGuard guard;
    Tensor p_test = sigmoid(probe.forward(x_test));
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      bool said_source = p_test.values()[i] >= 0.5;
      if (said_source != domain_of(test_rows[i])) ++wrong;
    }
    err = static_cast<double>(wrong) / static_cast<double>(test_rows.size());
  }
  double d = 2.0 * (1.0 - 2.0 * err);
  return std::min(2.0, std::max(0.0, d));
}

/// Error on the target portion of the best jointly trained classifier:
/// trains a fresh two-layer MLP on the union of both domains' frozen
/// features with true labels (fixed 200-epoch budget, early stop once the
/// training loss plateaus) and returns its target-side error rate.
inline double ideal_joint_error(const Tensor& source_features,
                                const std::vector<int>& source_labels,
                                const Tensor& target_features,
                                const std::vector<int>& target_labels, int k,
                                std::uint64_t seed) {
  if (source_labels.size() != source_features.rows() ||
      target_labels.size() != target_features.rows())
    throw ContractError("ideal_joint_error: label counts do not match feature rows");
  if (k < 2) throw ContractError("ideal_joint_error: need at least 2 classes");

  NoGradGuard snapshot_guard;
  Tensor pooled = detail_metrics::stack_features(source_features, target_features);
  std::vector<std::size_t> all_rows(pooled.rows());
  for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
  auto standardizer = detail_metrics::Standardizer::fit(pooled, all_rows);
  Tensor x = standardizer.apply(pooled, all_rows);
  std::vector<int> y = source_labels;
  y.insert(y.end(), target_labels.begin(), target_labels.end());

  nn::Mlp probe;
  {
    detail::grad_mode_flag() = true;
    probe = nn::init_params({pooled.cols(), 16, static_cast<std::size_t>(k)},
                            Rng::child_seed(seed, "ije-init"));
    nn::SgdOptimizer opt({{"probe", probe.parameters(), 1.0}}, 0.9, 0.2, 0.0, 0.0);
    double last = std::numeric_limits<double>::infinity();
    int flat_epochs = 0;
    for (int epoch = 0; epoch < 200; ++epoch) {
      opt.zero_grad();
      Tensor loss = nn::cross_entropy(softmax_rows(probe.forward(x)), y);
      loss.backward();
      opt.step({"probe"}, 0.0);
      double cur = loss.item();
      flat_epochs = (last - cur < 1e-7) ? flat_epochs + 1 : 0;
      last = cur;
      if (flat_epochs >= 10) break;
    }
    detail::grad_mode_flag() = false;
  }

  Tensor target_std = standardizer.apply(
      pooled, [&] {
        std::vector<std::size_t> rows(target_features.rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = source_features.rows() + i;
        return rows;
      }());
  std::vector<int> pred = argmax_rows(probe.forward(target_std));
  return 1.0 - accuracy(pred, target_labels);
}

/// Class predictions of head(G(x)) at every 2-D grid point.
inline std::vector<int> decision_boundary_export(const nn::Mlp& feature_extractor,
                                                 const nn::Mlp& head, const Tensor& grid) {
  if (grid.cols() != 2)
    throw ContractError(detail::msg("decision_boundary_export: grid must be [m x 2], got ",
                                    detail::shape_str(grid.shape())));
  if (feature_extractor.in_dim() != 2)
    throw ContractError(detail::msg("decision_boundary_export: model consumes ",
                                    feature_extractor.in_dim(),
                                    "-D inputs, boundary export needs 2-D"));
  NoGradGuard guard;
  return argmax_rows(head.forward(feature_extractor.forward(grid)));
}

}  // namespace scal::metrics
