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
 * @file clustering.hpp
 * @brief Spherical K-means over feature snapshots, warm-started from
 *        per-class source centers so cluster index k means class k.
 *
 * Features are consumed as plain numeric snapshots; nothing here touches the
 * gradient tape. Samples are never normalized (cosine distance makes that a
 * no-op for assignment); centers are kept unit-norm.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "scal/errors.hpp"
#include "scal/tensor.hpp"

namespace scal::clustering {

/// Target local structure: unit-norm centers, per-sample cluster indices
/// (the pseudo-labels), and the per-iteration clustering objective.
struct ClusterModel {
  std::vector<std::vector<double>> centers;  // K x d, each L2-normalized
  std::vector<int> assignments;              // n, values in [0, K)
  std::vector<double> objective_trace;       // one entry per assignment pass
  int iterations_run = 0;
};

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Half the cosine dissimilarity: 0 for parallel, 0.5 for orthogonal,
/// 1 for antipodal vectors.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError(detail::msg("cosine_distance: lengths ", a.size(), " vs ", b.size()));
  double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0)
    throw DegenerateVectorError("cosine_distance: zero-norm input");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  double cosine = dot / (na * nb);
  cosine = std::min(1.0, std::max(-1.0, cosine));
  return 0.5 * (1.0 - cosine);
}

/// Per-class mean of the source features, L2-normalized. Every class in
/// [0, K) must appear, and no class mean may vanish.
inline std::vector<std::vector<double>> source_class_centers(const Tensor& features,
                                                             const std::vector<int>& labels,
                                                             int k) {
  std::size_t n = features.rows(), d = features.cols();
  if (labels.size() != n)
    throw ContractError(detail::msg("source_class_centers: ", labels.size(), " labels for ",
                                    n, " rows"));
  if (k < 1) throw ContractError("source_class_centers: K must be at least 1");

  std::vector<std::vector<double>> centers(static_cast<std::size_t>(k),
                                           std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  const auto& fv = features.values();
  for (std::size_t i = 0; i < n; ++i) {
    int c = labels[i];
    if (c < 0 || c >= k)
      throw ContractError(detail::msg("source_class_centers: label ", c, " outside [0, ", k,
                                      ")"));
    for (std::size_t j = 0; j < d; ++j) centers[static_cast<std::size_t>(c)][j] += fv[i * d + j];
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw MissingClassError(detail::msg("source_class_centers: class ", c,
                                          " has no samples"));
    auto& center = centers[static_cast<std::size_t>(c)];
    for (double& v : center) v /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    double norm = l2_norm(center);
    if (norm == 0.0)
      throw DegenerateVectorError(detail::msg("source_class_centers: class ", c,
                                              " has zero mean feature"));
    for (double& v : center) v /= norm;
  }
  return centers;
}

namespace detail_cluster {

// Distance of a sample to a unit-norm center without the library-level
// zero-norm error: a zero feature row is treated as equidistant (0.5) from
// every center and falls to the lowest index by the tie rule, so one dead
// relu row cannot abort an epoch.
inline double sample_center_distance(std::span<const double> x, double x_norm,
                                     std::span<const double> center) {
  if (x_norm == 0.0) return 0.5;
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * center[i];
  double cosine = std::min(1.0, std::max(-1.0, dot / x_norm));
  return 0.5 * (1.0 - cosine);
}

}  // namespace detail_cluster

/// Lloyd-style alternation under cosine distance:
///   (i) assign every sample to the nearest center (ties to the lowest
///       index), (ii) move each center to the normalized mean direction of
///   its members. Clusters that come out empty or with a vanishing mean are
///   reset to their initial center, which preserves the cluster-to-class
///   identification established by the warm start.
///
/// Stops when assignments repeat, the objective improves by less than `tol`,
/// or `max_iter` is reached. The recorded objective is non-increasing.
inline ClusterModel spherical_kmeans(const Tensor& features,
                                     const std::vector<std::vector<double>>& init_centers,
                                     int max_iter = 50, double tol = 1e-6) {
  std::size_t n = features.rows(), d = features.cols();
  std::size_t k = init_centers.size();
  if (k == 0) throw ContractError("spherical_kmeans: no initial centers");
  if (n < k)
    throw ContractError(detail::msg("spherical_kmeans: ", n, " samples for ", k,
                                    " clusters"));
  if (max_iter < 1) throw ContractError("spherical_kmeans: max_iter must be positive");

  std::vector<std::vector<double>> centers = init_centers;
  for (std::size_t c = 0; c < k; ++c) {
    if (centers[c].size() != d)
      throw ShapeError(detail::msg("spherical_kmeans: center ", c, " has dimension ",
                                   centers[c].size(), ", features have ", d));
    double norm = l2_norm(centers[c]);
    if (std::fabs(norm - 1.0) > 1e-6)
      throw ContractError(detail::msg("spherical_kmeans: initial center ", c,
                                      " is not unit-norm (|.| = ", norm, ")"));
    for (double& v : centers[c]) v /= norm;  // renormalize to machine precision
  }

  const auto& fv = features.values();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i)
    norms[i] = l2_norm(std::span<const double>(fv.data() + i * d, d));

  ClusterModel model;
  model.centers = centers;
  model.assignments.assign(n, 0);
  std::vector<int> prev(n, -1);
  double prev_obj = 0.0;

  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment pass, recording the objective at the current centers.
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> x(fv.data() + i * d, d);
      int best = 0;
      double best_dist = detail_cluster::sample_center_distance(x, norms[i], model.centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        double dist = detail_cluster::sample_center_distance(x, norms[i], model.centers[c]);
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<int>(c);
        }
      }
      model.assignments[i] = best;
      obj += best_dist;
    }
    model.objective_trace.push_back(obj);
    model.iterations_run = iter + 1;

    bool unchanged = model.assignments == prev;
    bool converged = iter > 0 && prev_obj - obj < tol;
    prev = model.assignments;
    prev_obj = obj;
    if (unchanged || converged) break;

    // Center update: normalized mean direction of the members. Using member
    // directions (not raw features) is what makes the objective monotone.
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> acc(d, 0.0);
      std::size_t members = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (model.assignments[i] != static_cast<int>(c) || norms[i] == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) acc[j] += fv[i * d + j] / norms[i];
        ++members;
      }
      double norm = l2_norm(acc);
      if (members == 0 || norm == 0.0) {
        model.centers[c] = init_centers[c];
        double inorm = l2_norm(model.centers[c]);
        for (double& v : model.centers[c]) v /= inorm;
      } else {
        for (std::size_t j = 0; j < d; ++j) model.centers[c][j] = acc[j] / norm;
      }
    }
  }
  return model;
}

}  // namespace scal::clustering
