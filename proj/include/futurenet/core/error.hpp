// Copyright 2026 The FutureNet-LOF Authors
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

namespace futurenet {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string & what) : std::runtime_error(what) {}
};

/// Invalid configuration (bad ranges, inconsistent fields, unknown enum values).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string & what) : Error("config error: " + what) {}
};

/// Malformed input data (scene invariants violated, schema mismatches).
class DataError : public Error {
 public:
  explicit DataError(const std::string & what) : Error("data error: " + what) {}
};

/// Filesystem / serialization failures.
class IoError : public Error {
 public:
  explicit IoError(const std::string & what) : Error("io error: " + what) {}
};

/// Checkpoint problems: corruption, version mismatch, config mismatch.
class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string & what) : Error("checkpoint error: " + what) {}
};

/// Non-finite values where finite ones are required (e.g. NaN loss parts).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string & what) : Error("numeric error: " + what) {}
};

}  // namespace futurenet
