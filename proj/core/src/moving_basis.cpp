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

#include "qduffing/moving_basis.hpp"

#include <cmath>
#include <numbers>

#include "qduffing/errors.hpp"

namespace qduffing {

void RecenterPolicy::validate() const {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw ConfigError("recenter_threshold", "must be finite and > 0");
  }
  if (tail_levels < 1) throw ConfigError("tail_levels", "must be >= 1");
  if (!(tail_tolerance > 0.0 && tail_tolerance < 1.0)) {
    throw ConfigError("tail_tolerance", "must lie in (0, 1)");
  }
}

bool recenter_in_place(DensityMatrix& rho, FrameOffset& frame, const RecenterPolicy& policy,
                       const OperatorTable& table) {
  const Complex mean_a = table.band.a.trace_product(rho.matrix());
  if (std::abs(mean_a) <= policy.threshold) return false;

  const double dq = std::numbers::sqrt2 * mean_a.real();
  const double dp = std::numbers::sqrt2 * mean_a.imag();
  Eigen::MatrixXcd moved = displace(rho.matrix(), -mean_a, table);
  double trace = moved.trace().real();
  moved /= trace;
  rho.mutable_matrix() = hermitize(moved);
  frame.q0 += dq;
  frame.p0 += dp;
  return true;
}

RecenterResult recenter(const DensityMatrix& rho, const FrameOffset& frame,
                        const RecenterPolicy& policy, const OperatorTable& table) {
  RecenterResult out{rho, frame, false};
  out.moved = recenter_in_place(out.rho, out.frame, policy, table);
  return out;
}

double tail_population(const DensityMatrix& rho, int tail_levels) {
  const int dim = rho.dim();
  if (tail_levels < 0 || tail_levels >= dim) {
    throw Error(ErrorKind::kInvalidArgument, "tail_levels must lie in [0, dim)");
  }
  double sum = 0.0;
  for (int n = dim - tail_levels; n < dim; ++n) sum += rho(n, n).real();
  return sum;
}

}  // namespace qduffing
