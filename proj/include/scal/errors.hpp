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

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace scal {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes incompatible with the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Elementwise math outside its numeric domain (log of nonpositive,
/// division by zero).
class NumericDomainError : public Error {
 public:
  using Error::Error;
};

/// A caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A vector required to be nonzero had (numerically) zero norm.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

/// A class label in [0, K) has no samples where at least one is required.
class MissingClassError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite quantity.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration failed to parse or validate.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint container unreadable, corrupt, or version-incompatible.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename... Args>
std::string msg(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace detail

}  // namespace scal
