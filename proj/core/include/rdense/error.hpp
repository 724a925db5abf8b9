// Copyright 2026 The RDenseCNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace rdense {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An architecture or layer configuration that cannot be realized.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API called out of order or on the wrong object.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument values (labels out of range, bad hyperparameters).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing data / checkpoint files.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class MissingFileError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite values encountered during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rdense
