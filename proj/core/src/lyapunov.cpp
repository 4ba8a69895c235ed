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

#include "qduffing/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qduffing/errors.hpp"

namespace qduffing {
namespace {

constexpr double kDegenerate = 1e-300;

double checked_norm(const Eigen::Vector2d& v) {
  const double n = v.norm();
  if (!std::isfinite(n) || n < kDegenerate) {
    throw Error(ErrorKind::kDegenerateTangent,
                "tangent vector collapsed during Gram-Schmidt (norm " + std::to_string(n) + ")");
  }
  return n;
}

}  // namespace

void LyapunovAccumulator::update(const Matrix2& jacobian, double duration) {
  if (!jacobian.allFinite()) {
    throw Error(ErrorKind::kJacobianFailure, "non-finite Jacobian passed to Gram-Schmidt");
  }
  const Eigen::Vector2d v1 = jacobian * tangent_.u1;
  Eigen::Vector2d v2 = jacobian * tangent_.u2;
  const double r11 = checked_norm(v1);
  const Eigen::Vector2d u1 = v1 / r11;
  v2 -= u1.dot(v2) * u1;
  const double r22 = checked_norm(v2);
  tangent_.u1 = u1;
  tangent_.u2 = v2 / r22;

  const double slack = 1e-9 * std::max(1.0, burn_in_);
  if (elapsed_ + slack >= burn_in_) {
    log_sums_[0] += std::log(r11);
    log_sums_[1] += std::log(r22);
    accumulated_ += duration;
  }
  elapsed_ += duration;
}

LyapunovExponents LyapunovAccumulator::finalize() const {
  if (!(accumulated_ > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "no time accumulated after burn-in; run longer than the burn-in");
  }
  const double a = log_sums_[0] / accumulated_;
  const double b = log_sums_[1] / accumulated_;
  return {std::max(a, b), std::min(a, b)};
}

void LyapunovAccumulator::set_state(const std::array<double, 2>& log_sums,
                                    double accumulated_time) {
  log_sums_ = log_sums;
  accumulated_ = accumulated_time;
}

LyapunovAccumulator gram_schmidt_update(LyapunovAccumulator acc, const Matrix2& jacobian,
                                        double duration) {
  acc.update(jacobian, duration);
  return acc;
}

LyapunovExponents finalize(const LyapunovAccumulator& acc) { return acc.finalize(); }

std::array<double, 2> deterministic_means(const DensityMatrix& rho, double t, double dt,
                                          const FrameOffset& frame, const ModelParams& params,
                                          const OperatorTable& table) {
  const BandMatrix l = lindblad_band(frame, params, table);
  const BandMatrix h = hamiltonian_band(t, frame, params, table);
  // Same arithmetic as SmeIntegrator::advance with dW = 0.
  const double drift = SmeIntegrator::record_drift(rho, l, params);
  const double dy = drift * dt;
  const double innovation = dy - drift * dt;
  const BandMatrix m = rouchon_kraus(h, l, dt, innovation, dy, params.eta);
  const BandMatrix m_adj = m.adjoint();

  BandMatrix k_a = m_adj * (table.band.a * m);
  BandMatrix k_1 = m_adj * m;
  const double unmonitored = (1.0 - params.eta) * dt;
  if (unmonitored > 0.0) {
    const BandMatrix l_adj = l.adjoint();
    k_a.add_scaled(l_adj * (table.band.a * l), unmonitored);
    k_1.add_scaled(l_adj * l, unmonitored);
  }
  const Complex mean_a = k_a.trace_product(rho.matrix()) / k_1.trace_product(rho.matrix()).real();
  return {frame.q0 + std::numbers::sqrt2 * mean_a.real(),
          frame.p0 + std::numbers::sqrt2 * mean_a.imag()};
}

Matrix2 local_jacobian(const DensityMatrix& rho, double t, double dt, const FrameOffset& frame,
                       const ModelParams& params, double epsilon, const OperatorTable& table) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::kInvalidArgument, "Jacobian perturbation must be finite and > 0");
  }
  const double shift = epsilon / params.beta;
  const double scale = params.beta / (2.0 * epsilon);
  Matrix2 j;
  for (int col = 0; col < 2; ++col) {
    FrameOffset plus = frame;
    FrameOffset minus = frame;
    (col == 0 ? plus.q0 : plus.p0) += shift;
    (col == 0 ? minus.q0 : minus.p0) -= shift;
    const auto up = deterministic_means(rho, t, dt, plus, params, table);
    const auto down = deterministic_means(rho, t, dt, minus, params, table);
    j(0, col) = (up[0] - down[0]) * scale;
    j(1, col) = (up[1] - down[1]) * scale;
  }
  if (!j.allFinite()) {
    throw Error(ErrorKind::kJacobianFailure, "non-finite finite-difference Jacobian");
  }
  return j;
}

ClassicalLyapunovResult classical_lyapunov(const ModelParams& params, double total_time,
                                           double dt, const ClassicalLyapunovOptions& options) {
  if (!(dt > 0.0) || !(total_time > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "total_time and dt must be > 0");
  }
  if (options.renorm_stride < 1) {
    throw Error(ErrorKind::kInvalidArgument, "renorm_stride must be >= 1");
  }
  const long n_steps = std::lround(total_time / dt);
  ClassicalLyapunovResult result;
  LyapunovAccumulator acc(options.burn_in);

  ClassicalState s = options.initial;
  Matrix2 phi = Matrix2::Identity();
  auto advance = [&](double t) {
    auto field = [&](const ClassicalState& st, const Matrix2& m, double time) {
      return std::pair{classical_flow(st, time, params),
                       Matrix2(classical_jacobian(st, time, params) * m)};
    };
    auto shifted = [](const ClassicalState& st, const ClassicalState& d, double h) {
      return ClassicalState{st.x + h * d.x, st.y + h * d.y};
    };
    const auto [f1, m1] = field(s, phi, t);
    const auto [f2, m2] = field(shifted(s, f1, 0.5 * dt), phi + 0.5 * dt * m1, t + 0.5 * dt);
    const auto [f3, m3] = field(shifted(s, f2, 0.5 * dt), phi + 0.5 * dt * m2, t + 0.5 * dt);
    const auto [f4, m4] = field(shifted(s, f3, dt), phi + dt * m3, t + dt);
    s.x += dt / 6.0 * (f1.x + 2.0 * f2.x + 2.0 * f3.x + f4.x);
    s.y += dt / 6.0 * (f1.y + 2.0 * f2.y + 2.0 * f3.y + f4.y);
    phi += dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
  };

  if (options.sample_stride > 0) result.samples.push_back({0.0, s.x, s.y});
  int pending = 0;
  for (long n = 0; n < n_steps; ++n) {
    advance(static_cast<double>(n) * dt);
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw Error(ErrorKind::kNumericalOverflow,
                  "classical trajectory diverged at step " + std::to_string(n));
    }
    if (++pending == options.renorm_stride || n + 1 == n_steps) {
      acc.update(phi, pending * dt);
      phi.setIdentity();
      pending = 0;
    }
    if (options.sample_stride > 0 && (n + 1) % options.sample_stride == 0) {
      result.samples.push_back({static_cast<double>(n + 1) * dt, s.x, s.y});
    }
  }
  result.exponents = acc.finalize();
  return result;
}

QuantumLyapunovEstimator::QuantumLyapunovEstimator(const LyapunovSchedule& schedule,
                                                   long running_stride)
    : schedule_(schedule),
      running_stride_(running_stride),
      acc_(schedule.burn_in_cycles * 2.0 * std::numbers::pi) {
  if (!(schedule.epsilon > 0.0)) throw ConfigError("epsilon", "must be > 0");
  if (schedule.renorm_stride < 1) throw ConfigError("renorm_stride", "must be >= 1");
  if (!(schedule.burn_in_cycles >= 0.0)) throw ConfigError("burn_in_cycles", "must be >= 0");
}

void QuantumLyapunovEstimator::observe(const StepContext& ctx) {
  const Matrix2 j =
      local_jacobian(ctx.rho, ctx.t, ctx.dt, ctx.frame, ctx.params, schedule_.epsilon, ctx.table);
  product_ = j * product_;
  pending_time_ += ctx.dt;
  if (++pending_ < schedule_.renorm_stride) return;

  acc_.update(product_, pending_time_);
  product_.setIdentity();
  pending_ = 0;
  pending_time_ = 0.0;
  ++updates_;
  if (running_stride_ > 0 && updates_ % running_stride_ == 0 && acc_.accumulated_time() > 0.0) {
    const LyapunovExponents e = acc_.finalize();
    running_.push_back({ctx.t + ctx.dt, e.plus, e.minus});
  }
}

StepObserver QuantumLyapunovEstimator::observer() {
  return [this](const StepContext& ctx) { observe(ctx); };
}

QuantumLyapunovResult quantum_lyapunov(const InitialState& initial, const ModelParams& params,
                                       const Schedule& schedule,
                                       const LyapunovSchedule& lyapunov, std::uint64_t seed,
                                       OperatorTableCache& tables) {
  QuantumLyapunovEstimator estimator(
      lyapunov, std::max<long>(1, schedule.output_stride / std::max(1, lyapunov.renorm_stride)));
  QuantumLyapunovResult result;
  result.record = simulate_trajectory(initial, params, schedule, seed, tables, estimator.observer());
  result.exponents = estimator.result();
  result.running = estimator.running();
  return result;
}

}  // namespace qduffing
