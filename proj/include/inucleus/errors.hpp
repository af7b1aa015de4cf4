/*
 * Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef INUCLEUS_ERRORS_HPP
#define INUCLEUS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace inucleus {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or ranks incompatible with an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid model, training or CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (WAV, CSV).
class ParseError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace inucleus

#endif  // INUCLEUS_ERRORS_HPP
