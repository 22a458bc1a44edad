/*
 * Copyright 2026 the mtlrank authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace mtlrank {

// Error taxonomy. The CLI maps these to exit codes:
// usage/ConfigError -> 1, DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/layer shape disagreement.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// API misuse: a precondition the caller is responsible for.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Out-of-range index where the index itself is the problem.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration file or option combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, divergence, or other numerical failure.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtlrank
