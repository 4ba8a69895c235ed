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

#include "qduffing/errors.hpp"

namespace qduffing {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidDimension: return "invalid-dimension";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kSingularStep: return "singular-step";
    case ErrorKind::kNumericalOverflow: return "numerical-overflow";
    case ErrorKind::kJacobianFailure: return "jacobian-failure";
    case ErrorKind::kDegenerateTangent: return "degenerate-tangent";
    case ErrorKind::kBasisTooSmall: return "basis-too-small";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace qduffing
