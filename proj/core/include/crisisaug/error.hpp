// Copyright 2026 The crisisaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace crisisaug {

// Error families. The CLI maps each family onto a distinct exit code, so
// throw the most specific one that applies. Precondition violations on
// function arguments use std::invalid_argument.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, manifests, or schema violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent dataset content.
class DataError : public Error {
 public:
  using Error::Error;
};

// A generative or scoring backend failed or answered out of contract.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses, undefined softmax, zero-norm vectors and friends.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace crisisaug
