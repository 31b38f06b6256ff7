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
 * @file config.hpp
 * @brief Experiment configuration: flat `section.key = value` text files,
 *        validation with field-level diagnostics, canonical serialization.
 */

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scal/errors.hpp"
#include "scal/rng.hpp"

namespace scal {

/// Conditioning variants of the adversarial pipeline, plus the alternative
/// cluster warm start.
enum class AblationMode {
  scal,                            // surrogate-classifier conditions
  no_conditions,                   // discriminator sees raw features
  src_classifier_conditions,       // conditions from the source classifier
  non_differentiable_conditions,   // one-hot pseudo-label conditions
  kmeans_last_init,                // clustering warm-started from last epoch
};

inline const char* to_string(AblationMode m) {
  switch (m) {
    case AblationMode::scal: return "scal";
    case AblationMode::no_conditions: return "no_conditions";
    case AblationMode::src_classifier_conditions: return "src_classifier_conditions";
    case AblationMode::non_differentiable_conditions: return "non_differentiable_conditions";
    case AblationMode::kmeans_last_init: return "kmeans_last_init";
  }
  return "?";
}

inline AblationMode ablation_mode_from_string(const std::string& s) {
  if (s == "scal") return AblationMode::scal;
  if (s == "no_conditions") return AblationMode::no_conditions;
  if (s == "src_classifier_conditions") return AblationMode::src_classifier_conditions;
  if (s == "non_differentiable_conditions") return AblationMode::non_differentiable_conditions;
  if (s == "kmeans_last_init") return AblationMode::kmeans_last_init;
  throw ConfigError(detail::msg("training.mode: unknown ablation mode '", s, "'"));
}

/// Everything one reproducible run needs. All randomness descends from
/// `seed` through named child seeds, so no field change perturbs an
/// unrelated random stream.
struct ExperimentConfig {
  // global
  std::uint64_t seed = 0;
  bool seed_set = false;

  // dataset block
  std::string dataset_generator = "twin_moons";  // twin_moons | shifted_blobs
  std::size_t dataset_n_per_class = 300;
  double dataset_sigma = 0.1;
  double dataset_rotation_deg = 30.0;
  int dataset_k = 2;
  std::size_t dataset_dim = 2;
  double dataset_separation = 4.0;
  double dataset_shift_scale = 2.0;
  std::optional<std::uint64_t> dataset_seed;  // defaults to child of global seed

  // model block
  std::vector<std::size_t> model_hidden = {15, 15};

  // training block
  std::size_t training_epochs = 100;
  std::size_t training_batch = 32;
  double training_eta0 = 0.001;
  double training_alpha = 10.0;
  double training_beta = 0.75;
  double training_momentum = 0.9;
  double training_lambda = 1.0;
  double training_classifier_lr_mult = 10.0;
  double training_domain_lr_mult = 10.0;
  AblationMode training_mode = AblationMode::scal;
  double training_noise_level = 0.0;
  bool training_detach_conditions = false;
  int training_cluster_max_iter = 50;
  double training_cluster_tol = 1e-6;
  std::size_t training_checkpoint_every = 0;  // 0 = final checkpoint only

  // output block
  std::string output_dir = "runs/run";
  bool output_boundary = true;  // export a decision-boundary grid for 2-D inputs

  std::uint64_t resolved_dataset_seed() const {
    return dataset_seed ? *dataset_seed : Rng::child_seed(seed, "dataset");
  }

  std::size_t feature_dim() const { return model_hidden.back(); }

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail_cfg {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(detail::msg(key, ": expected a number, got '", v, "'"));
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(detail::msg(key, ": expected an integer, got '", v, "'"));
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    unsigned long long i = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(detail::msg(key, ": expected a nonnegative integer, got '", v, "'"));
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(detail::msg(key, ": expected true/false, got '", v, "'"));
}

inline std::vector<std::size_t> parse_dims(const std::string& key, const std::string& v) {
  std::vector<std::size_t> dims;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    long long i = parse_int(key, item);
    if (i < 1) throw ConfigError(detail::msg(key, ": widths must be positive, got ", i));
    dims.push_back(static_cast<std::size_t>(i));
  }
  if (dims.empty()) throw ConfigError(detail::msg(key, ": no layer widths given"));
  return dims;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail_cfg

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and
/// malformed values raise ConfigError naming the field.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail_cfg::trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(detail::msg("line ", lineno, ": expected 'key = value', got '", line,
                                    "'"));
    std::string key = detail_cfg::trim(line.substr(0, eq));
    std::string val = detail_cfg::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(detail::msg("line ", lineno, ": empty key"));

    using namespace detail_cfg;
    if (key == "seed") {
      cfg.seed = parse_u64(key, val);
      cfg.seed_set = true;
    } else if (key == "dataset.generator") {
      if (val != "twin_moons" && val != "shifted_blobs")
        throw ConfigError(detail::msg("dataset.generator: unknown generator '", val, "'"));
      cfg.dataset_generator = val;
    } else if (key == "dataset.n_per_class") {
      cfg.dataset_n_per_class = static_cast<std::size_t>(parse_u64(key, val));
    } else if (key == "dataset.sigma") {
      cfg.dataset_sigma = parse_double(key, val);
    } else if (key == "dataset.rotation_deg") {
      cfg.dataset_rotation_deg = parse_double(key, val);
    } else if (key == "dataset.k") {
      cfg.dataset_k = static_cast<int>(parse_int(key, val));
    } else if (key == "dataset.dim") {
      cfg.dataset_dim = static_cast<std::size_t>(parse_u64(key, val));
    } else if (key == "dataset.separation") {
      cfg.dataset_separation = parse_double(key, val);
    } else if (key == "dataset.shift_scale") {
      cfg.dataset_shift_scale = parse_double(key, val);
    } else if (key == "dataset.seed") {
      cfg.dataset_seed = parse_u64(key, val);
    } else if (key == "model.hidden") {
      cfg.model_hidden = parse_dims(key, val);
    } else if (key == "training.epochs") {
      cfg.training_epochs = static_cast<std::size_t>(parse_u64(key, val));
    } else if (key == "training.batch") {
      cfg.training_batch = static_cast<std::size_t>(parse_u64(key, val));
    } else if (key == "training.eta0") {
      cfg.training_eta0 = parse_double(key, val);
    } else if (key == "training.alpha") {
      cfg.training_alpha = parse_double(key, val);
    } else if (key == "training.beta") {
      cfg.training_beta = parse_double(key, val);
    } else if (key == "training.momentum") {
      cfg.training_momentum = parse_double(key, val);
    } else if (key == "training.lambda") {
      cfg.training_lambda = parse_double(key, val);
    } else if (key == "training.classifier_lr_mult") {
      cfg.training_classifier_lr_mult = parse_double(key, val);
    } else if (key == "training.domain_lr_mult") {
      cfg.training_domain_lr_mult = parse_double(key, val);
    } else if (key == "training.mode") {
      cfg.training_mode = ablation_mode_from_string(val);
    } else if (key == "training.noise_level") {
      cfg.training_noise_level = parse_double(key, val);
    } else if (key == "training.detach_conditions") {
      cfg.training_detach_conditions = parse_bool(key, val);
    } else if (key == "training.cluster_max_iter") {
      cfg.training_cluster_max_iter = static_cast<int>(parse_int(key, val));
    } else if (key == "training.cluster_tol") {
      cfg.training_cluster_tol = parse_double(key, val);
    } else if (key == "training.checkpoint_every") {
      cfg.training_checkpoint_every = static_cast<std::size_t>(parse_u64(key, val));
    } else if (key == "output.dir") {
      cfg.output_dir = val;
    } else if (key == "output.boundary") {
      cfg.output_boundary = parse_bool(key, val);
    } else {
      throw ConfigError(detail::msg("unknown configuration key '", key, "'"));
    }
  }
  return cfg;
}

/// Full validation beyond per-field parsing. Throws ConfigError naming the
/// first offending field.
inline void validate_config(const ExperimentConfig& cfg) {
  if (!cfg.seed_set) throw ConfigError("seed: required field is missing");
  if (cfg.dataset_n_per_class < 1)
    throw ConfigError("dataset.n_per_class: must be at least 1");
  if (cfg.dataset_sigma < 0) throw ConfigError("dataset.sigma: must be nonnegative");
  if (cfg.dataset_generator == "twin_moons" && cfg.dataset_k != 2)
    throw ConfigError("dataset.k: twin_moons is a 2-class problem");
  if (cfg.dataset_generator == "shifted_blobs" && cfg.dataset_k < 2)
    throw ConfigError("dataset.k: must be at least 2");
  if (cfg.dataset_dim < 2) throw ConfigError("dataset.dim: must be at least 2");
  if (cfg.model_hidden.empty()) throw ConfigError("model.hidden: no layer widths");
  if (cfg.training_epochs < 1) throw ConfigError("training.epochs: must be at least 1");
  if (cfg.training_batch < 2)
    throw ConfigError("training.batch: must be at least 2 (one sample per domain)");
  if (!(cfg.training_eta0 > 0)) throw ConfigError("training.eta0: must be positive");
  if (cfg.training_alpha < 0) throw ConfigError("training.alpha: must be nonnegative");
  if (cfg.training_beta < 0) throw ConfigError("training.beta: must be nonnegative");
  if (cfg.training_momentum < 0 || cfg.training_momentum >= 1)
    throw ConfigError("training.momentum: must be in [0, 1)");
  if (cfg.training_lambda < 0) throw ConfigError("training.lambda: must be nonnegative");
  if (cfg.training_noise_level < 0 || cfg.training_noise_level > 1)
    throw ConfigError("training.noise_level: must be in [0, 1]");
  if (cfg.training_cluster_max_iter < 1)
    throw ConfigError("training.cluster_max_iter: must be at least 1");
  if (!(cfg.training_cluster_tol >= 0))
    throw ConfigError("training.cluster_tol: must be nonnegative");
  if (cfg.output_dir.empty()) throw ConfigError("output.dir: must not be empty");
}

/// Canonical text form; parse(serialize(c)) == c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  using detail_cfg::fmt_double;
  std::ostringstream out;
  out << "seed = " << cfg.seed << "\n";
  out << "dataset.generator = " << cfg.dataset_generator << "\n";
  out << "dataset.n_per_class = " << cfg.dataset_n_per_class << "\n";
  out << "dataset.sigma = " << fmt_double(cfg.dataset_sigma) << "\n";
  out << "dataset.rotation_deg = " << fmt_double(cfg.dataset_rotation_deg) << "\n";
  out << "dataset.k = " << cfg.dataset_k << "\n";
  out << "dataset.dim = " << cfg.dataset_dim << "\n";
  out << "dataset.separation = " << fmt_double(cfg.dataset_separation) << "\n";
  out << "dataset.shift_scale = " << fmt_double(cfg.dataset_shift_scale) << "\n";
  if (cfg.dataset_seed) out << "dataset.seed = " << *cfg.dataset_seed << "\n";
  out << "model.hidden = ";
  for (std::size_t i = 0; i < cfg.model_hidden.size(); ++i) {
    if (i) out << ",";
    out << cfg.model_hidden[i];
  }
  out << "\n";
  out << "training.epochs = " << cfg.training_epochs << "\n";
  out << "training.batch = " << cfg.training_batch << "\n";
  out << "training.eta0 = " << fmt_double(cfg.training_eta0) << "\n";
  out << "training.alpha = " << fmt_double(cfg.training_alpha) << "\n";
  out << "training.beta = " << fmt_double(cfg.training_beta) << "\n";
  out << "training.momentum = " << fmt_double(cfg.training_momentum) << "\n";
  out << "training.lambda = " << fmt_double(cfg.training_lambda) << "\n";
  out << "training.classifier_lr_mult = " << fmt_double(cfg.training_classifier_lr_mult)
      << "\n";
  out << "training.domain_lr_mult = " << fmt_double(cfg.training_domain_lr_mult) << "\n";
  out << "training.mode = " << to_string(cfg.training_mode) << "\n";
  out << "training.noise_level = " << fmt_double(cfg.training_noise_level) << "\n";
  out << "training.detach_conditions = " << (cfg.training_detach_conditions ? "true" : "false")
      << "\n";
  out << "training.cluster_max_iter = " << cfg.training_cluster_max_iter << "\n";
  out << "training.cluster_tol = " << fmt_double(cfg.training_cluster_tol) << "\n";
  out << "training.checkpoint_every = " << cfg.training_checkpoint_every << "\n";
  out << "output.dir = " << cfg.output_dir << "\n";
  out << "output.boundary = " << (cfg.output_boundary ? "true" : "false") << "\n";
  return out.str();
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(detail::msg("cannot open config file ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace scal
