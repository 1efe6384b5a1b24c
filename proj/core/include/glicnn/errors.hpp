// Copyright 2026 The glicnn Authors.
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

namespace glicnn {

// Base for every error raised by the library. code() is a stable,
// machine-readable identifier used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Tensor extents or model dimensions that do not line up.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error("shape_mismatch", message) {}
};

// An operation was invoked in the wrong lifecycle state (e.g. backward
// before any forward pass was recorded).
class StateError : public Error {
 public:
  explicit StateError(const std::string& message) : Error("invalid_state", message) {}
};

// Invalid user-supplied configuration or precondition violation.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("invalid_config", message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error("invalid_data", message) {}
  DataError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

}  // namespace glicnn
