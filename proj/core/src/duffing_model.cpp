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

#include "qduffing/duffing_model.hpp"

#include <cmath>
#include <numbers>

#include "qduffing/errors.hpp"

namespace qduffing {

std::string to_string(LindbladKind kind) {
  return kind == LindbladKind::kAnnihilation ? "annihilation" : "position";
}

LindbladKind lindblad_kind_from_string(const std::string& name) {
  if (name == "annihilation") return LindbladKind::kAnnihilation;
  if (name == "position") return LindbladKind::kPosition;
  throw ConfigError("lindblad_kind", "expected \"annihilation\" or \"position\", got \"" + name + "\"");
}

void ModelParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(beta) || beta <= 0.0) throw ConfigError("beta", "must be finite and > 0");
  if (!finite(g) || g < 0.0) throw ConfigError("g", "must be finite and >= 0");
  if (!finite(gamma) || gamma <= 0.0) throw ConfigError("gamma", "must be finite and > 0");
  if (!finite(eta) || eta < 0.0 || eta > 1.0) throw ConfigError("eta", "must lie in [0, 1]");
  if (!finite(drive_phase)) throw ConfigError("drive_phase", "must be finite");
}

Complex FrameOffset::alpha() const { return Complex(q0, p0) / std::numbers::sqrt2; }

BandMatrix hamiltonian_band(double t, const FrameOffset& frame, const ModelParams& params,
                            const OperatorTable& table) {
  const auto& op = table.band;
  const HamiltonianShape& shape = params.shape;
  const double q0 = frame.q0;
  const double p0 = frame.p0;
  const double quartic = shape.quartic * params.beta * params.beta;
  const double quadratic = shape.quadratic;
  const double drive = params.g / params.beta * std::cos(t + params.drive_phase);
  const double squeeze = shape.squeezing_term ? params.gamma : 0.0;

  // H(q + q0, p + p0) collected by monomial.
  const double c_q4 = quartic;
  const double c_q3 = 4.0 * quartic * q0;
  const double c_q2 = 6.0 * quartic * q0 * q0 + quadratic;
  const double c_q = 4.0 * quartic * q0 * q0 * q0 + 2.0 * quadratic * q0 + drive + squeeze * p0;
  const double c_p2 = shape.kinetic;
  const double c_p = 2.0 * shape.kinetic * p0 + squeeze * q0;
  const double c_qp = 0.5 * squeeze;
  const double c_id = shape.kinetic * p0 * p0 + quartic * q0 * q0 * q0 * q0 +
                      quadratic * q0 * q0 + drive * q0 + squeeze * q0 * p0;

  BandMatrix h = c_q4 * op.q4;
  h.add_scaled(op.q3, c_q3);
  h.add_scaled(op.q2, c_q2);
  h.add_scaled(op.q, c_q);
  h.add_scaled(op.p2, c_p2);
  h.add_scaled(op.p, c_p);
  h.add_scaled(op.qp_pq, c_qp);
  h.add_identity(c_id);
  return h;
}

OperatorMatrix hamiltonian_at(double t, const FrameOffset& frame, const ModelParams& params,
                              const OperatorTable& table) {
  return hamiltonian_band(t, frame, params, table).dense();
}

BandMatrix lindblad_band(const FrameOffset& frame, const ModelParams& params,
                         const OperatorTable& table) {
  const double c = std::sqrt(2.0 * params.gamma);
  if (params.lindblad_kind == LindbladKind::kPosition) {
    BandMatrix l = c * table.band.q;
    l.add_identity(c * frame.q0);
    return l;
  }
  BandMatrix l = c * table.band.a;
  l.add_identity(c * frame.alpha());
  return l;
}

OperatorMatrix lindblad_at(const FrameOffset& frame, const ModelParams& params,
                           const OperatorTable& table) {
  return lindblad_band(frame, params, table).dense();
}

namespace {

struct FlowRates {
  double squeeze;  // from (Gamma/2)(qp + pq): +x, -y
  double damping;  // from annihilation-type measurement: -x, -y
};

FlowRates flow_rates(const ModelParams& params) {
  return {params.shape.squeezing_term ? params.gamma : 0.0,
          params.lindblad_kind == LindbladKind::kAnnihilation ? params.gamma : 0.0};
}

}  // namespace

ClassicalState classical_flow(const ClassicalState& s, double t, const ModelParams& params) {
  const HamiltonianShape& shape = params.shape;
  const FlowRates r = flow_rates(params);
  const double force = -2.0 * shape.quadratic * s.x - 4.0 * shape.quartic * s.x * s.x * s.x -
                       params.g * std::cos(t + params.drive_phase);
  return {2.0 * shape.kinetic * s.y + (r.squeeze - r.damping) * s.x,
          force - (r.squeeze + r.damping) * s.y};
}

Matrix2 classical_jacobian(const ClassicalState& s, double /*t*/, const ModelParams& params) {
  const HamiltonianShape& shape = params.shape;
  const FlowRates r = flow_rates(params);
  Matrix2 j;
  j << r.squeeze - r.damping, 2.0 * shape.kinetic,
      -2.0 * shape.quadratic - 12.0 * shape.quartic * s.x * s.x, -(r.squeeze + r.damping);
  return j;
}

}  // namespace qduffing
