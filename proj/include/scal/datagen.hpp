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
 * @file datagen.hpp
 * @brief Synthetic domain-shift datasets: rotated twin moons, shifted
 *        Gaussian blobs, and evaluation grids. Pure functions of
 *        (parameters, seed).
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scal/errors.hpp"
#include "scal/rng.hpp"
#include "scal/tensor.hpp"

namespace scal::datagen {

enum class Domain { source, target };

inline const char* domain_name(Domain d) { return d == Domain::source ? "source" : "target"; }

/// Feature matrix with optional class labels and a domain tag. Target labels
/// are generated for evaluation only; the trainer never feeds them to a loss.
struct LabeledDataset {
  Tensor features;  // [n x d]
  std::optional<std::vector<int>> labels;
  Domain domain = Domain::source;
  std::string generator;  // name + parameters + seed, for run manifests

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
};

inline constexpr double kPi = 3.14159265358979323846;

/// Rotates 2-D row vectors about the origin by `degrees`.
inline std::vector<double> rotate_2d(const std::vector<double>& xy, double degrees) {
  double rad = degrees * kPi / 180.0;
  double c = std::cos(rad), s = std::sin(rad);
  std::vector<double> out(xy.size());
  for (std::size_t i = 0; i + 1 < xy.size(); i += 2) {
    out[i] = c * xy[i] - s * xy[i + 1];
    out[i + 1] = s * xy[i] + c * xy[i + 1];
  }
  return out;
}

namespace detail_gen {

// One two-moons draw: class 0 on the upper arc, class 1 on the lower,
// n points per class, Gaussian jitter sigma.
inline std::pair<std::vector<double>, std::vector<int>> moons_sample(std::size_t n_per_class,
                                                                     double sigma, Rng& rng) {
  std::vector<double> xy;
  xy.reserve(n_per_class * 4);
  std::vector<int> labels;
  labels.reserve(n_per_class * 2);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    double t = kPi * rng.uniform01();
    double x = std::cos(t) - 0.5;
    double y = std::sin(t) - 0.25;
    xy.push_back(x + sigma * rng.normal());
    xy.push_back(y + sigma * rng.normal());
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < n_per_class; ++i) {
    double t = kPi * rng.uniform01();
    double x = 0.5 - std::cos(t);
    double y = 0.25 - std::sin(t);
    xy.push_back(x + sigma * rng.normal());
    xy.push_back(y + sigma * rng.normal());
    labels.push_back(1);
  }
  return {std::move(xy), std::move(labels)};
}

}  // namespace detail_gen

/// Two interleaving half circles, plus a target domain drawn from the same
/// process and rotated about the origin. The target rotation is exactly one
/// matrix multiply on an unrotated draw, so rotation 0 gives a domain with
/// the identical distribution and bit-identical samples for the same seed.
inline std::pair<LabeledDataset, LabeledDataset> twin_moons(std::size_t n_per_class,
                                                            double sigma,
                                                            double rotation_deg,
                                                            std::uint64_t seed) {
  if (n_per_class < 1) throw ContractError("twin_moons: n_per_class must be at least 1");
  if (sigma < 0.0) throw ContractError("twin_moons: sigma must be nonnegative");

  Rng src_rng(Rng::child_seed(seed, "moons-source"));
  Rng tgt_rng(Rng::child_seed(seed, "moons-target"));

  auto [sx, sl] = detail_gen::moons_sample(n_per_class, sigma, src_rng);
  auto [tx, tl] = detail_gen::moons_sample(n_per_class, sigma, tgt_rng);
  tx = rotate_2d(tx, rotation_deg);

  std::ostringstream desc;
  desc << "twin_moons(n_per_class=" << n_per_class << ",sigma=" << sigma
       << ",rotation_deg=" << rotation_deg << ",seed=" << seed << ")";

  LabeledDataset src{Tensor({n_per_class * 2, 2}, std::move(sx)), std::move(sl),
                     Domain::source, desc.str()};
  LabeledDataset tgt{Tensor({n_per_class * 2, 2}, std::move(tx)), std::move(tl),
                     Domain::target, desc.str()};
  return {std::move(src), std::move(tgt)};
}

/// K Gaussian clusters on a circle of radius `separation` (first two
/// coordinates; remaining coordinates are pure noise). The target re-samples
/// the mixture, rotates each class by a small per-class angle about its
/// mean, and translates everything by `shift_scale` along a fixed diagonal
/// direction: local class structure survives while the domains move apart.
inline std::pair<LabeledDataset, LabeledDataset> shifted_blobs(int k,
                                                               std::size_t n_per_class,
                                                               std::size_t d,
                                                               double separation,
                                                               double shift_scale,
                                                               std::uint64_t seed) {
  if (k < 2) throw ContractError("shifted_blobs: K must be at least 2");
  if (d < 2) throw ContractError("shifted_blobs: dimension must be at least 2");
  if (n_per_class < 1) throw ContractError("shifted_blobs: n_per_class must be at least 1");

  std::vector<std::vector<double>> means(static_cast<std::size_t>(k),
                                         std::vector<double>(d, 0.0));
  for (int c = 0; c < k; ++c) {
    double angle = 2.0 * kPi * c / k;
    means[static_cast<std::size_t>(c)][0] = separation * std::cos(angle);
    means[static_cast<std::size_t>(c)][1] = separation * std::sin(angle);
  }

  // Unit diagonal shift direction in the first two coordinates.
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  auto draw = [&](Rng& rng, bool shifted) {
    std::size_t n = static_cast<std::size_t>(k) * n_per_class;
    std::vector<double> flat(n * d);
    std::vector<int> labels(n);
    std::size_t row = 0;
    for (int c = 0; c < k; ++c) {
      double class_rot = shifted ? (10.0 + 5.0 * c) * kPi / 180.0 : 0.0;
      double cr = std::cos(class_rot), sr = std::sin(class_rot);
      for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
        std::vector<double> p(d);
        for (std::size_t j = 0; j < d; ++j)
          p[j] = means[static_cast<std::size_t>(c)][j] + rng.normal();
        if (shifted) {
          // rotate about the class mean in the first two coordinates
          double dx = p[0] - means[static_cast<std::size_t>(c)][0];
          double dy = p[1] - means[static_cast<std::size_t>(c)][1];
          p[0] = means[static_cast<std::size_t>(c)][0] + cr * dx - sr * dy;
          p[1] = means[static_cast<std::size_t>(c)][1] + sr * dx + cr * dy;
          p[0] += shift_scale * inv_sqrt2;
          p[1] += shift_scale * inv_sqrt2;
        }
        for (std::size_t j = 0; j < d; ++j) flat[row * d + j] = p[j];
        labels[row] = c;
      }
    }
    return std::pair<std::vector<double>, std::vector<int>>{std::move(flat),
                                                            std::move(labels)};
  };

  Rng src_rng(Rng::child_seed(seed, "blobs-source"));
  Rng tgt_rng(Rng::child_seed(seed, "blobs-target"));
  auto [sx, sl] = draw(src_rng, false);
  auto [tx, tl] = draw(tgt_rng, true);

  std::ostringstream desc;
  desc << "shifted_blobs(k=" << k << ",n_per_class=" << n_per_class << ",d=" << d
       << ",separation=" << separation << ",shift_scale=" << shift_scale << ",seed=" << seed
       << ")";

  std::size_t n = static_cast<std::size_t>(k) * n_per_class;
  LabeledDataset src{Tensor({n, d}, std::move(sx)), std::move(sl), Domain::source,
                     desc.str()};
  LabeledDataset tgt{Tensor({n, d}, std::move(tx)), std::move(tl), Domain::target,
                     desc.str()};
  return {std::move(src), std::move(tgt)};
}

/// Row-major lattice of resolution x resolution evaluation points covering
/// [x_lo, x_hi] x [y_lo, y_hi] inclusive.
inline Tensor grid_2d(double x_lo, double x_hi, double y_lo, double y_hi,
                      std::size_t resolution) {
  if (resolution < 2) throw ContractError("grid_2d: resolution must be at least 2 per axis");
  // Fill each axis from both ends so symmetric bounds give a bit-exact
  // symmetric lattice.
  auto axis = [resolution](double lo, double hi) {
    std::vector<double> v(resolution);
    double span = hi - lo;
    for (std::size_t i = 0; i <= resolution - 1 - i; ++i) {
      double t = static_cast<double>(i) / static_cast<double>(resolution - 1);
      v[i] = lo + span * t;
      v[resolution - 1 - i] = hi - span * t;
    }
    return v;
  };
  std::vector<double> xs = axis(x_lo, x_hi);
  std::vector<double> ys = axis(y_lo, y_hi);
  std::vector<double> flat;
  flat.reserve(resolution * resolution * 2);
  for (double y : ys)
    for (double x : xs) {
      flat.push_back(x);
      flat.push_back(y);
    }
  return Tensor({resolution * resolution, 2}, std::move(flat));
}

// ---------------------------------------------------------------------------
// CSV import/export (header: x0..x{d-1},label,domain)
// ---------------------------------------------------------------------------

inline void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(detail::msg("save_csv: cannot open ", path));
  std::size_t d = ds.dim();
  for (std::size_t j = 0; j < d; ++j) out << "x" << j << ",";
  out << "label,domain\n";
  char buf[32];
  const auto& fv = ds.features.values();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", fv[i * d + j]);
      out << buf << ",";
    }
    if (ds.labels) out << (*ds.labels)[i];
    out << "," << domain_name(ds.domain) << "\n";
  }
}

inline LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(detail::msg("load_csv: cannot open ", path));
  std::string line;
  if (!std::getline(in, line)) throw Error(detail::msg("load_csv: empty file ", path));

  std::size_t d = 0;
  {
    std::stringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (!col.empty() && col[0] == 'x') ++d;
    }
  }
  if (d == 0) throw Error(detail::msg("load_csv: no feature columns in ", path));

  std::vector<double> flat;
  std::vector<int> labels;
  bool any_label = false;
  Domain domain = Domain::source;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::getline(ls, cell, ','))
        throw Error(detail::msg("load_csv: short row ", n, " in ", path));
      flat.push_back(std::stod(cell));
    }
    if (!std::getline(ls, cell, ','))
      throw Error(detail::msg("load_csv: missing label cell in row ", n));
    if (!cell.empty()) {
      labels.push_back(std::stoi(cell));
      any_label = true;
    } else {
      labels.push_back(-1);
    }
    if (std::getline(ls, cell, ','))
      domain = (cell == "target") ? Domain::target : Domain::source;
    ++n;
  }
  LabeledDataset ds;
  ds.features = Tensor({n, d}, std::move(flat));
  if (any_label) ds.labels = std::move(labels);
  ds.domain = domain;
  ds.generator = "csv(" + path + ")";
  return ds;
}

}  // namespace scal::datagen
