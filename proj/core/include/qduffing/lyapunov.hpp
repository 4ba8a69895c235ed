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
#include <cstdint>
#include <vector>

#include "qduffing/duffing_model.hpp"
#include "qduffing/fock.hpp"
#include "qduffing/sme_engine.hpp"

namespace qduffing {

struct LyapunovExponents {
  double plus = 0.0;
  double minus = 0.0;
};

/// Orthonormal pair of tangent vectors in scaled (x, y) coordinates.
struct TangentFrame {
  Eigen::Vector2d u1 = Eigen::Vector2d::UnitX();
  Eigen::Vector2d u2 = Eigen::Vector2d::UnitY();
};

/// Benettin-style accumulator: tangent vectors are pushed through Jacobians
/// and re-orthonormalised; the logarithms of the Gram-Schmidt stretch factors
/// are summed once the burn-in time has passed.
class LyapunovAccumulator {
 public:
  explicit LyapunovAccumulator(double burn_in = 0.0) : burn_in_(burn_in) {}

  /// Applies J (covering `duration` of time) to the tangent frame and
  /// re-orthonormalises. Stretch factors are logged only if the interval
  /// starts at or after the burn-in time.
  void update(const Matrix2& jacobian, double duration);

  const TangentFrame& tangent() const { return tangent_; }
  const std::array<double, 2>& log_sums() const { return log_sums_; }
  double elapsed() const { return elapsed_; }
  double burn_in() const { return burn_in_; }
  /// Time covered by the logged updates.
  double accumulated_time() const { return accumulated_; }

  /// log_sums / accumulated time, sorted descending. Throws if nothing has
  /// been accumulated yet.
  LyapunovExponents finalize() const;

  /// Test and restore hook: sets the sums and accumulated time directly.
  void set_state(const std::array<double, 2>& log_sums, double accumulated_time);

 private:
  TangentFrame tangent_;
  std::array<double, 2> log_sums_{0.0, 0.0};
  double elapsed_ = 0.0;
  double accumulated_ = 0.0;
  double burn_in_ = 0.0;
};

LyapunovAccumulator gram_schmidt_update(LyapunovAccumulator acc, const Matrix2& jacobian,
                                        double duration);
LyapunovExponents finalize(const LyapunovAccumulator& acc);

/// Global (<q>, <p>) after one explicit deterministic (dW = 0) step, i.e.
/// deterministic_step(..., StepScheme::kExplicit), evaluated as
/// Tr[K rho] with banded K = M^dag A M + (1 - eta) dt L^dag A L, without
/// forming the stepped state.
std::array<double, 2> deterministic_means(const DensityMatrix& rho, double t, double dt,
                                          const FrameOffset& frame, const ModelParams& params,
                                          const OperatorTable& table);

/// Central-difference Jacobian of the deterministic one-step map of the
/// scaled means (x, y) = beta (<q>, <p>). A phase-space shift of the state by
/// d is the same as shifting the frame by d with the local state unchanged,
/// which is how the perturbations are applied.
Matrix2 local_jacobian(const DensityMatrix& rho, double t, double dt, const FrameOffset& frame,
                       const ModelParams& params, double epsilon, const OperatorTable& table);

struct ClassicalLyapunovOptions {
  int renorm_stride = 10;
  double burn_in = 20.0 * 3.14159265358979323846;  // ten drive cycles
  ClassicalState initial{1.0, 0.0};
  /// Record (t, x, y) every this many steps; 0 records nothing.
  long sample_stride = 0;
};

struct ClassicalSample {
  double t, x, y;
};

struct ClassicalLyapunovResult {
  LyapunovExponents exponents;
  std::vector<ClassicalSample> samples;
};

/// RK4 integration of the classical flow together with its variational
/// equation, renormalised every `renorm_stride` steps.
ClassicalLyapunovResult classical_lyapunov(const ModelParams& params, double total_time,
                                           double dt,
                                           const ClassicalLyapunovOptions& options = {});

struct LyapunovSchedule {
  double epsilon = 1e-3;
  int renorm_stride = 10;
  double burn_in_cycles = 10.0;
};

struct RunningEstimate {
  double t, lambda_plus, lambda_minus;
};

/// Lyapunov estimate along a live quantum trajectory. Hook `observe` into a
/// trajectory runner; per-step Jacobians are multiplied over renorm_stride
/// steps before each Gram-Schmidt pass.
class QuantumLyapunovEstimator {
 public:
  QuantumLyapunovEstimator(const LyapunovSchedule& schedule, long running_stride = 0);

  void observe(const StepContext& ctx);
  StepObserver observer();

  const LyapunovAccumulator& accumulator() const { return acc_; }
  const std::vector<RunningEstimate>& running() const { return running_; }
  LyapunovExponents result() const { return acc_.finalize(); }

 private:
  LyapunovSchedule schedule_;
  long running_stride_;
  LyapunovAccumulator acc_;
  Matrix2 product_ = Matrix2::Identity();
  int pending_ = 0;
  double pending_time_ = 0.0;
  long updates_ = 0;
  std::vector<RunningEstimate> running_;
};

struct QuantumLyapunovResult {
  LyapunovExponents exponents;
  std::vector<RunningEstimate> running;
  TrajectoryRecord record;
};

/// Simulates one trajectory and estimates its exponents along the way.
QuantumLyapunovResult quantum_lyapunov(const InitialState& initial, const ModelParams& params,
                                       const Schedule& schedule,
                                       const LyapunovSchedule& lyapunov, std::uint64_t seed,
                                       OperatorTableCache& tables);

}  // namespace qduffing
