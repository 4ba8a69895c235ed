// Copyright 2026 The qduffing Authors
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

namespace qduffing {

enum class ErrorKind {
  kInvalidDimension,
  kInvalidArgument,
  kDimensionMismatch,
  kSingularStep,
  kNumericalOverflow,
  kJacobianFailure,
  kDegenerateTangent,
  kBasisTooSmall,
  kConfig,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures caused by the integration itself rather than bad input.
  bool is_numerical() const noexcept {
    return kind_ == ErrorKind::kSingularStep ||
           kind_ == ErrorKind::kNumericalOverflow ||
           kind_ == ErrorKind::kJacobianFailure ||
           kind_ == ErrorKind::kDegenerateTangent ||
           kind_ == ErrorKind::kBasisTooSmall;
  }

 private:
  ErrorKind kind_;
};

/// Configuration errors name the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorKind::kConfig, field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace qduffing
