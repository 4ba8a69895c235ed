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
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qduffing/duffing_model.hpp"
#include "qduffing/fock.hpp"
#include "qduffing/moving_basis.hpp"

namespace qduffing {

struct StepInput {
  const DensityMatrix& rho;
  double t = 0.0;   ///< time at step start; H and L are evaluated here
  double dt = 0.0;  ///< > 0
  double dW = 0.0;  ///< Wiener increment, variance dt
  FrameOffset frame{};
  const ModelParams& params;
};

struct StepOutput {
  DensityMatrix rho_next;
  double dy = 0.0;  ///< record increment
};

/// How a step is discretised.
///
/// kExplicit is the plain first-order Kraus map with
/// M = I - (iH + L^dag L/2) dt + (eta/2) L^2 (dW^2 - dt) + sqrt(eta) L dy and
/// the unmonitored jump (1 - eta) L rho L^dag dt. In a truncated basis the top
/// Fock levels of the quartic Hamiltonian have |lambda| dt of order one and
/// this M amplifies them by about 1 + lambda^2 dt^2 per step, so long runs
/// at realistic dimensions diverge.
///
/// kCayley keeps the same structure but
///  - replaces I - iH dt by the Cayley propagator
///    U = (I + iH dt/2)^-1 (I - iH dt/2), with H at the step midpoint, which
///    is exactly unitary and cannot amplify any level;
///  - puts only the monitored damping eta L^dag L / 2 into M,
///    M = U (I - eta L^dag L dt/2) + (eta/2) L^2 (dW^2 - dt) + sqrt(eta) L dy;
///  - applies the unmonitored (1 - eta) dissipator as half steps before and
///    after M, each a second-order Kraus map.
/// Both schemes agree to first order, are sums of Kraus terms (so keep
/// positivity), and with eta = 0 kCayley is a second-order Strang splitting
/// of the Lindblad equation.
enum class StepScheme { kExplicit, kCayley };

const char* to_string(StepScheme scheme);
StepScheme step_scheme_from_string(const std::string& name);

/// Rouchon's positivity-preserving step with the record written in terms of
/// the measured increment dy:
///
///   M = I - (iH + L^dag L / 2) dt + (eta/2) L^2 (dW^2 - dt) + sqrt(eta) L dy
///   rho' = (M rho M^dag + (1 - eta) L rho L^dag dt) / Tr[...]
///
/// with dy = sqrt(eta) Tr[L rho + rho L^dag] dt + dW, or its stabilised form
/// (see StepScheme).
/// Both the truth simulation and a record-driven filter go through
/// `advance_with_record` arithmetic, so a filter with matched parameters
/// reproduces the truth bit for bit. The integrator owns scratch space sized
/// to the last state it saw; it is not thread-safe.
class SmeIntegrator {
 public:
  explicit SmeIntegrator(StepScheme scheme = StepScheme::kCayley) : scheme_(scheme) {}

  StepScheme scheme() const { return scheme_; }

  /// In-place stochastic step; returns dy.
  double advance(DensityMatrix& rho, double t, double dt, double dW, const FrameOffset& frame,
                 const ModelParams& params, const OperatorTable& table);

  /// In-place record-driven step: the innovation is recovered from dy under
  /// `params`. Returns the innovation that was used.
  double advance_with_record(DensityMatrix& rho, double t, double dt, double dy,
                             const FrameOffset& frame, const ModelParams& params,
                             const OperatorTable& table);

  /// sqrt(eta) Tr[L rho + rho L^dag]: the predicted record drift per unit time.
  static double record_drift(const DensityMatrix& rho, const BandMatrix& lindblad,
                             const ModelParams& params);

 private:
  void apply(DensityMatrix& rho, const BandMatrix& h, const BandMatrix& l, double dt, double dW,
             double dy, const ModelParams& params);
  void apply_explicit(const Eigen::MatrixXcd& r, const BandMatrix& h, const BandMatrix& l,
                      double dt, double dW, double dy, const ModelParams& params);
  void apply_cayley(const Eigen::MatrixXcd& r, const BandMatrix& h, const BandMatrix& l,
                    double dt, double dW, double dy, const ModelParams& params);
  double hamiltonian_time(double t, double dt) const;
  void dissipate_half(const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out);
  void right_apply_kraus(const Eigen::MatrixXcd& z, Eigen::MatrixXcd& out) const;

  StepScheme scheme_;
  Eigen::MatrixXcd y_, w_, n_, v_;
  std::vector<BandMatrix> jump_kraus_;
  BandMatrix minus_, feedback_;  // (I - iH dt/2)(I - L^dag L dt/2), measurement terms
  BandLU plus_adjoint_;           // factors of (I + iH dt/2)^dag
};

/// Kraus operator M of an explicit Rouchon step (banded).
BandMatrix rouchon_kraus(const BandMatrix& h, const BandMatrix& l, double dt, double dW,
                         double dy, double eta);

StepOutput rouchon_step(const StepInput& in, const OperatorTable& table,
                        StepScheme scheme = StepScheme::kCayley);

/// The step predicted when dW = 0. Keeps the -(eta/2) L^2 dt and the
/// record-mean feedback terms.
DensityMatrix deterministic_step(const DensityMatrix& rho, double t, double dt,
                                 const FrameOffset& frame, const ModelParams& params,
                                 const OperatorTable& table,
                                 StepScheme scheme = StepScheme::kCayley);

/// Classical fourth-order step of the unconditioned Lindblad equation.
/// Reference integrator for cross-checks; not used by the simulator.
DensityMatrix lindblad_rk4_step(const DensityMatrix& rho, double t, double dt,
                                const FrameOffset& frame, const ModelParams& params,
                                const OperatorTable& table);

/// Record-driven step of a filter that may carry wrong parameters.
StepOutput filter_step(const DensityMatrix& rho_f, double dy, double t, double dt,
                       const FrameOffset& frame_f, const ModelParams& filter_params,
                       const OperatorTable& table, StepScheme scheme = StepScheme::kCayley);

/// Seeded N(0, dt) source for Wiener increments. Independent streams come
/// from `derive_seed(base, index)`.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed);
  double next(double variance);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index);

/// Working-block policy. The state lives in a `dim`-level basis, but only
/// the leading block that holds population above `population_cutoff` (plus
/// `margin` levels, rounded up to `granularity`) takes part in the
/// arithmetic. With adaptive = false the full basis is always used.
struct BasisPolicy {
  bool adaptive = true;
  double population_cutoff = 1e-16;
  int margin = 16;
  int granularity = 8;
  int min_dim = 16;
};

struct Schedule {
  double dt = 0.0;
  long n_steps = 0;
  int output_stride = 1;
  RecenterPolicy recenter{};
  /// Steps between eigenvalue-positivity diagnostics; 0 disables them.
  long positivity_stride = 0;
  /// Keep every per-step dy (needed to replay the record through a filter).
  bool keep_full_record = false;
  StepScheme scheme = StepScheme::kCayley;
  /// Size of the full basis; 0 takes the dimension of the initial state.
  int dim = 0;
  BasisPolicy basis{};
};

/// Time series of one trajectory, sampled every output_stride steps.
/// mean_q / mean_p are global (local mean + frame offset); dy is the record
/// increment accumulated since the previous sample.
struct TrajectoryRecord {
  std::vector<double> times, dy, mean_q, mean_p, purity, q0, p0;
  std::vector<int> dim_used;
  std::uint64_t seed = 0;

  std::vector<double> full_dy;  ///< per step, only with keep_full_record

  double max_tail_population = 0.0;
  long tail_warnings = 0;
  long recenter_count = 0;
  double min_eigenvalue = 1.0;  ///< most negative eigenvalue seen at diagnostics

  std::size_t size() const { return times.size(); }
};

struct InitialState {
  DensityMatrix rho;
  FrameOffset frame;
};

/// Vacuum in a frame centred on the right-hand well minimum, (q, p) = (1/beta, 0).
InitialState default_initial_state(const ModelParams& params, int dim);

/// Everything an observer may look at before each step. `rho` and `table`
/// have the working-block dimension.
struct StepContext {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  const DensityMatrix& rho;
  const FrameOffset& frame;
  const ModelParams& params;
  const OperatorTable& table;
};

using StepObserver = std::function<void(const StepContext&)>;

/// Stepwise driver for one trajectory: owns the state, the frame, the
/// sampled record and the moving-basis bookkeeping. Can be driven by fresh
/// Wiener increments (a simulated system) or by an external record (a filter).
class TrajectoryRunner {
 public:
  TrajectoryRunner(const InitialState& initial, const ModelParams& params,
                   const Schedule& schedule, OperatorTableCache& tables,
                   std::uint64_t seed_label = 0);

  void set_observer(StepObserver observer) { observer_ = std::move(observer); }

  /// Advances with Wiener increment dW; returns the record increment dy.
  double step(double dW);
  /// Advances driven by a measured record increment.
  void step_with_record(double dy);

  long step_index() const { return step_; }
  double time() const { return static_cast<double>(step_) * schedule_.dt; }
  const DensityMatrix& rho() const { return rho_; }
  const FrameOffset& frame() const { return frame_; }
  const ModelParams& params() const { return params_; }
  const Schedule& schedule() const { return schedule_; }
  const OperatorTable& table() const { return *table_; }
  int max_dim() const { return max_dim_; }

  const TrajectoryRecord& record() const { return record_; }
  TrajectoryRecord take_record() { return std::move(record_); }

 private:
  void notify();
  void finish_step(double dy);
  void sample();
  void fit_block();
  void resize_block(int dim);

  ModelParams params_;
  Schedule schedule_;
  OperatorTableCache* tables_;
  std::shared_ptr<const OperatorTable> table_;
  int max_dim_ = 0;
  SmeIntegrator integrator_;
  DensityMatrix rho_;
  FrameOffset frame_;
  long step_ = 0;
  double dy_since_sample_ = 0.0;
  StepObserver observer_;
  TrajectoryRecord record_;
};

/// Integrates the SME with seeded Wiener increments and a moving basis.
/// `observer`, when set, sees the state before every step.
TrajectoryRecord simulate_trajectory(const InitialState& initial, const ModelParams& params,
                                     const Schedule& schedule, std::uint64_t seed,
                                     OperatorTableCache& tables,
                                     const StepObserver& observer = nullptr);

/// Smallest working block (multiple of granularity, within [min_dim, dim])
/// that keeps `margin` levels above the last one with population above the
/// cutoff.
int working_block_size(const DensityMatrix& rho, const BasisPolicy& policy, int dim);

/// Zero-pads or truncates rho to dim x dim and restores unit trace.
DensityMatrix resize_state(const DensityMatrix& rho, int dim);

/// Local means (<q>, <p>) in the current frame.
std::array<double, 2> local_means(const DensityMatrix& rho, const OperatorTable& table);

}  // namespace qduffing
