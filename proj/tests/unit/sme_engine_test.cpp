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


#include "qduffing/sme_engine.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "checks.hpp"
#include "qduffing/errors.hpp"

namespace qduffing {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(SmeEngine, DeterministicStepMatchesRk4OverOneCycle) {
  EXPECT_LE(checks::integrator_vs_rk4(30), 1e-4);
}

TEST(SmeEngine, AmplitudeDampingDecay) { EXPECT_LE(checks::amplitude_damping_error(), 1e-4); }

TEST(SmeEngine, PerStepInvariantsAtUnitEfficiency) {
  const checks::StepInvariants inv = checks::step_invariants(3000);
  EXPECT_LE(inv.max_purity_step, 1e-10);
  EXPECT_LE(inv.max_trace_error, 1e-13);
  EXPECT_EQ(inv.max_hermiticity_error, 0.0);
}

TEST(SmeEngine, HeldVacuumRecordIsWhiteNoise) {
  const checks::RecordStats s = checks::held_vacuum_record(100000);
  EXPECT_LE(s.mean_sigmas, 3.0) << "mean " << s.mean;
  EXPECT_LE(s.variance_sigmas, 3.0) << "variance " << s.variance << " dt " << s.dt;
}

TEST(SmeEngine, ExplicitStepMatchesDenseKrausMap) {
  const int dim = 20;
  const OperatorTable table(dim);
  ModelParams params;
  params.beta = 1.0;
  params.eta = 0.7;
  const FrameOffset frame{1.0, 0.2};
  const DensityMatrix rho = DensityMatrix::coherent(dim, Complex(0.3, -0.2));
  const double t = 0.4;
  const double dt = 1e-3;
  const double dW = 0.021;

  const StepOutput out = rouchon_step(StepInput{rho, t, dt, dW, frame, params}, table,
                                      StepScheme::kExplicit);

  const Complex i(0.0, 1.0);
  const OperatorMatrix h = hamiltonian_at(t, frame, params, table);
  const OperatorMatrix l = lindblad_at(frame, params, table);
  const double drift = std::sqrt(params.eta) * (l * rho.matrix() + rho.matrix() * l.adjoint()).trace().real();
  const double dy = drift * dt + dW;
  const OperatorMatrix m = table.identity - (i * h + 0.5 * l.adjoint() * l) * dt +
                           0.5 * params.eta * l * l * (dW * dW - dt) + std::sqrt(params.eta) * l * dy;
  Eigen::MatrixXcd next = m * rho.matrix() * m.adjoint() +
                          (1.0 - params.eta) * dt * l * rho.matrix() * l.adjoint();
  next /= next.trace().real();
  EXPECT_NEAR(out.dy, dy, 1e-15);
  EXPECT_LT((out.rho_next.matrix() - next).norm(), 1e-12);
}

// Both schemes are first order, so their one-step outputs differ at O(dt^2).
TEST(SmeEngine, SchemesDifferAtSecondOrder) {
  const int dim = 30;
  const OperatorTable table(dim);
  ModelParams params;
  params.beta = 1.0;
  params.eta = 0.5;
  const FrameOffset frame{1.0, 0.0};
  const DensityMatrix rho = DensityMatrix::coherent(dim, Complex(0.4, 0.1));
  std::vector<double> distance;
  for (double dt : {1e-3, 1e-4}) {
    const StepOutput a = rouchon_step(StepInput{rho, 0.2, dt, 0.5 * std::sqrt(dt), frame, params},
                                      table, StepScheme::kExplicit);
    const StepOutput b = rouchon_step(StepInput{rho, 0.2, dt, 0.5 * std::sqrt(dt), frame, params},
                                      table, StepScheme::kCayley);
    EXPECT_EQ(a.dy, b.dy);
    distance.push_back(trace_distance(a.rho_next, b.rho_next));
  }
  EXPECT_LT(distance[0], 1e-3);
  const double ratio = distance[0] / distance[1];
  EXPECT_GT(ratio, 50.0);
  EXPECT_LT(ratio, 200.0);
}

TEST(SmeEngine, StepRejectsBadInput) {
  const OperatorTable table(10);
  ModelParams params;
  const DensityMatrix rho = DensityMatrix::number_state(12, 0);
  EXPECT_THROW(rouchon_step(StepInput{rho, 0.0, 1e-3, 0.0, {}, params}, table), Error);
  const DensityMatrix ok = DensityMatrix::number_state(10, 0);
  EXPECT_THROW(rouchon_step(StepInput{ok, 0.0, -1e-3, 0.0, {}, params}, table), Error);
  EXPECT_THROW(rouchon_step(StepInput{ok, 0.0, 1e-3, std::nan(""), {}, params}, table), Error);
}

TEST(SmeEngine, SchemeNames) {
  EXPECT_EQ(step_scheme_from_string("explicit"), StepScheme::kExplicit);
  EXPECT_EQ(step_scheme_from_string(to_string(StepScheme::kCayley)), StepScheme::kCayley);
  EXPECT_THROW(step_scheme_from_string("euler"), ConfigError);
}

TEST(SmeEngine, GaussianSourceIsSeeded) {
  GaussianSource a(42), b(42), c(43);
  for (int k = 0; k < 10; ++k) {
    const double x = a.next(1e-3);
    EXPECT_EQ(x, b.next(1e-3));
    EXPECT_NE(x, c.next(1e-3));
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

Schedule short_schedule(int steps_per_cycle, long cycles, int dim) {
  Schedule s;
  s.dt = 2.0 * kPi / steps_per_cycle;
  s.n_steps = cycles * steps_per_cycle;
  s.output_stride = steps_per_cycle / 20;
  s.dim = dim;
  return s;
}

TEST(SmeEngine, TrajectoriesAreDeterministic) {
  ModelParams params;
  params.beta = 0.5;
  params.eta = 0.6;
  const Schedule s = short_schedule(600, 1, 48);
  OperatorTableCache tables;
  const InitialState init = default_initial_state(params, 48);
  const TrajectoryRecord a = simulate_trajectory(init, params, s, 9, tables);
  const TrajectoryRecord b = simulate_trajectory(init, params, s, 9, tables);
  const TrajectoryRecord c = simulate_trajectory(init, params, s, 10, tables);
  EXPECT_EQ(a.dy, b.dy);
  EXPECT_EQ(a.mean_q, b.mean_q);
  EXPECT_EQ(a.purity, b.purity);
  EXPECT_NE(a.dy, c.dy);
  EXPECT_EQ(a.size(), 21u);
}

TEST(SmeEngine, MatchedFilterIsBitIdentical) {
  ModelParams params;
  params.beta = 0.5;
  params.eta = 0.4;
  Schedule s = short_schedule(600, 1, 48);
  OperatorTableCache tables;
  const InitialState init = default_initial_state(params, 48);
  TrajectoryRunner truth(init, params, s, tables, 3);
  TrajectoryRunner filter(init, params, s, tables, 3);
  GaussianSource noise(3);
  for (long n = 0; n < s.n_steps; ++n) {
    filter.step_with_record(truth.step(noise.next(s.dt)));
    ASSERT_EQ(truth.rho().dim(), filter.rho().dim());
    ASSERT_TRUE(truth.rho().matrix() == filter.rho().matrix()) << "step " << n;
    ASSERT_EQ(truth.frame(), filter.frame());
  }
}

TEST(SmeEngine, FilterStepRecoversTheInnovation) {
  const OperatorTable table(20);
  ModelParams params;
  params.beta = 1.0;
  params.eta = 0.8;
  const FrameOffset frame{1.0, 0.0};
  const DensityMatrix rho = DensityMatrix::coherent(20, Complex(0.2, 0.3));
  const StepOutput sys = rouchon_step(StepInput{rho, 0.0, 1e-3, 0.013, frame, params}, table);
  const StepOutput fil = filter_step(rho, sys.dy, 0.0, 1e-3, frame, params, table);
  EXPECT_TRUE(sys.rho_next.matrix() == fil.rho_next.matrix());
}

TEST(SmeEngine, AdaptiveBlockMatchesFullBasis) {
  ModelParams params;
  params.beta = 0.5;
  params.eta = 1.0;
  Schedule s = short_schedule(1000, 1, 96);
  OperatorTableCache tables;
  const InitialState init = default_initial_state(params, 96);
  const TrajectoryRecord adaptive = simulate_trajectory(init, params, s, 4, tables);
  s.basis.adaptive = false;
  const TrajectoryRecord full = simulate_trajectory(init, params, s, 4, tables);
  ASSERT_EQ(adaptive.size(), full.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < full.size(); ++k) {
    worst = std::max(worst, std::abs(adaptive.mean_q[k] - full.mean_q[k]));
    worst = std::max(worst, std::abs(adaptive.mean_p[k] - full.mean_p[k]));
  }
  EXPECT_LT(worst, 1e-8);
  // The block must actually shrink at some point for the comparison to mean anything.
  EXPECT_LT(*std::min_element(adaptive.dim_used.begin(), adaptive.dim_used.end()), 96);
}

TEST(SmeEngine, WorkingBlockSize) {
  BasisPolicy policy;
  EXPECT_EQ(working_block_size(DensityMatrix::number_state(100, 0), policy, 100), 24);
  EXPECT_EQ(working_block_size(DensityMatrix::number_state(100, 20), policy, 100), 40);
  EXPECT_EQ(working_block_size(DensityMatrix::number_state(100, 95), policy, 100), 100);
  EXPECT_EQ(working_block_size(DensityMatrix::number_state(10, 0), policy, 10), 10);
}

TEST(SmeEngine, ResizeStatePadsAndTruncates) {
  const DensityMatrix rho = DensityMatrix::coherent(20, Complex(0.5, 0.0));
  const DensityMatrix big = resize_state(rho, 30);
  EXPECT_EQ(big.dim(), 30);
  EXPECT_TRUE(big.matrix().topLeftCorner(20, 20) == rho.matrix());
  const DensityMatrix small = resize_state(rho, 12);
  EXPECT_NEAR(small.trace(), 1.0, 1e-15);
  EXPECT_THROW(resize_state(rho, 1), Error);
}

TEST(SmeEngine, TooSmallBasisAborts) {
  ModelParams params;
  params.beta = 0.1;
  params.eta = 1.0;
  Schedule s = short_schedule(600, 1, 12);
  s.recenter.threshold = 1e9;  // the state leaves the fixed frame within a cycle
  OperatorTableCache tables;
  try {
    simulate_trajectory(default_initial_state(params, 12), params, s, 1, tables);
    FAIL() << "expected the truncation check to abort";
  } catch (const Error& e) {
    EXPECT_TRUE(e.is_numerical()) << e.what();
  }
}

}  // namespace
}  // namespace qduffing
