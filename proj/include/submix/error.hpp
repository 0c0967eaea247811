// Copyright 2026 The SubMix Authors
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

#ifndef SUBMIX_ERROR_HPP_
#define SUBMIX_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace submix {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands live on different vocabularies.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A scalar parameter is outside its domain (alpha <= 1, lambda outside
// [0, 1], negative temperature, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Not enough data to satisfy a structural request (too few users for k parts,
// more codes than the code space holds).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Components that must agree on shape do not (ensemble vs ledger, k < 2).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace submix

#endif  // SUBMIX_ERROR_HPP_
