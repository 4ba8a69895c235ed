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

#include <array>
#include <string>

#include "qduffing/band_matrix.hpp"
#include "qduffing/fock.hpp"

namespace qduffing {

enum class LindbladKind { kAnnihilation, kPosition };

std::string to_string(LindbladKind kind);
LindbladKind lindblad_kind_from_string(const std::string& name);

/// Coefficients of the kinetic and potential monomials. The defaults give the
/// double-well Duffing oscillator; other values exist for tests that need an
/// analytically solvable Hamiltonian (harmonic, free, or H = 0).
struct HamiltonianShape {
  double kinetic = 0.5;     ///< multiplies p^2
  double quartic = 0.25;    ///< multiplies beta^2 q^4
  double quadratic = -0.5;  ///< multiplies q^2
  bool squeezing_term = true;  ///< include (Gamma/2)(qp + pq)

  bool operator==(const HamiltonianShape&) const = default;
};

/// All parameters of the monitored oscillator, in dimensionless units.
struct ModelParams {
  double beta = 0.1;         ///< classicality scale; beta -> 0 is the classical limit
  double g = 0.3;            ///< drive amplitude coefficient (drive is g/beta)
  double gamma = 0.125;      ///< damping / measurement rate
  double eta = 1.0;          ///< measurement efficiency in [0, 1]
  double drive_phase = 0.0;  ///< phi in cos(t + phi)
  LindbladKind lindblad_kind = LindbladKind::kAnnihilation;
  HamiltonianShape shape{};

  /// Throws ConfigError naming the first field that violates its invariant.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

/// Phase-space displacement of the moving basis.
struct FrameOffset {
  double q0 = 0.0;
  double p0 = 0.0;

  /// alpha0 = (q0 + i p0) / sqrt(2).
  Complex alpha() const;
  bool operator==(const FrameOffset&) const = default;
};

/// Classical phase-space point in scaled coordinates x = beta q, y = beta p.
struct ClassicalState {
  double x = 0.0;
  double y = 0.0;
};

using Matrix2 = Eigen::Matrix2d;

/// Hamiltonian with q -> q + q0 and p -> p + p0 substituted and expanded over
/// the cached monomials, drive evaluated at time t.
BandMatrix hamiltonian_band(double t, const FrameOffset& frame, const ModelParams& params,
                            const OperatorTable& table);
OperatorMatrix hamiltonian_at(double t, const FrameOffset& frame, const ModelParams& params,
                              const OperatorTable& table);

/// sqrt(2 Gamma)(a + alpha0) or sqrt(2 Gamma)(q + q0), depending on the kind.
BandMatrix lindblad_band(const FrameOffset& frame, const ModelParams& params,
                         const OperatorTable& table);
OperatorMatrix lindblad_at(const FrameOffset& frame, const ModelParams& params,
                           const OperatorTable& table);

/// Mean-field limit of the monitored dynamics in scaled coordinates. For the
/// default shape and annihilation-type measurement this is
///   dx/dt = y,  dy/dt = x - x^3 - 2 Gamma y - g cos(t + phi).
/// See docs/classical_limit.md for the derivation.
ClassicalState classical_flow(const ClassicalState& s, double t, const ModelParams& params);

/// Exact partial derivatives of `classical_flow`.
Matrix2 classical_jacobian(const ClassicalState& s, double t, const ModelParams& params);

}  // namespace qduffing
