// Copyright 2026 The erasehash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace erasehash {

// Base of every error thrown by the library. The CLI maps subclasses onto
// exit codes, so new failure kinds should derive from the closest match.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A configuration value is unknown or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A persisted file is truncated or structurally invalid.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A persisted file parsed, but its CRC32 does not match the payload.
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// The pair-wise supervision cannot satisfy a request, e.g. a row without any
// similar database item.
class SupervisionError : public Error {
 public:
  using Error::Error;
};

}  // namespace erasehash
