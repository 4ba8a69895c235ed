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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qduffing/duffing_model.hpp"
#include "qduffing/lyapunov.hpp"
#include "qduffing/moving_basis.hpp"
#include "qduffing/sme_engine.hpp"

namespace qduffing {

/// Regime defaults used when a config leaves dim / steps_per_cycle at 0.
int default_dim(double beta);              // 80 (beta >= 0.5), 150 (>= 0.2), else 200
int default_steps_per_cycle(double beta);  // 3000 (beta >= 0.3), else 6000

/// One simulation run. Zero-valued dim, steps_per_cycle and output_stride
/// mean "pick the default"; `resolved()` fills them in and validates.
struct RunConfig {
  ModelParams model{};
  int dim = 0;
  int steps_per_cycle = 0;
  long cycles = 100;
  std::uint64_t seed = 1;
  RecenterPolicy recenter{};
  LyapunovSchedule lyapunov{};
  std::string output_dir = "qduffing_out";
  int output_stride = 0;  ///< 0: 50 samples per drive cycle
  StepScheme scheme = StepScheme::kCayley;
  bool adaptive_basis = true;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  RunConfig resolved() const;

  double dt() const;
  long n_steps() const { return cycles * steps_per_cycle; }
  Schedule schedule() const;  ///< requires a resolved config
};

/// Flat JSON with the field names of RunConfig (model fields at top level:
/// beta, g, gamma, eta, drive_phase, lindblad_kind; recenter_threshold,
/// tail_levels, tail_tolerance; epsilon, renorm_stride, burn_in_cycles).
/// `dt` may be given instead of steps_per_cycle and must divide 2*pi.
/// Unknown keys are rejected. Throws ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

/// Documentation of every config field with its default, for --help.
std::vector<std::pair<std::string, std::string>> config_field_help();

struct SimulationResult {
  RunConfig config;  ///< resolved
  TrajectoryRecord record;
  LyapunovExponents exponents;
  std::vector<RunningEstimate> running;
  double mean_purity = 0.0;  ///< time average over samples after the burn-in
  double final_purity = 0.0;
};

/// Runs one trajectory with the Lyapunov estimator attached.
SimulationResult run_simulation(const RunConfig& config, OperatorTableCache& tables);

/// trajectory.csv, lyapunov.csv and summary.json in `dir`.
void write_simulation(const SimulationResult& result, const std::filesystem::path& dir);
std::string simulation_summary_json(const SimulationResult& result);

struct SweepSpec {
  std::vector<double> beta_list{1.0, 0.5, 0.4, 0.3, 0.2, 0.1};
  std::vector<double> eta_list{1.0, 0.6, 0.2};
  int trajectories_per_point = 4;
  std::uint64_t base_seed = 1;

  void validate() const;
};

struct SweepRow {
  double beta = 0.0;
  double eta = 0.0;
  int replica = 0;
  std::uint64_t seed = 0;
  int dim = 0;
  int steps_per_cycle = 0;
  std::string status;  ///< "ok" or the error kind
  std::string message;
  LyapunovExponents exponents{};
  double mean_purity = 0.0;

  bool ok() const { return status == "ok"; }
};

struct SweepPoint {
  double beta = 0.0;
  double eta = 0.0;
  int runs = 0;
  int succeeded = 0;
  double median_lambda_plus = 0.0;
  double median_lambda_minus = 0.0;
  double median_mean_purity = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< beta-major, then eta, then replica
  std::vector<SweepPoint> points;
  double success_fraction() const;
};

/// Config of one sweep run. Replica r uses derive_seed(base_seed, r) at
/// every grid point, so all points see the same noise streams. dim and
/// steps_per_cycle follow the regime defaults unless `base` pins them.
RunConfig sweep_run_config(const RunConfig& base, const SweepSpec& spec, double beta, double eta,
                           int replica);

using ProgressCallback = std::function<void(const std::string&)>;

/// Runs every (beta, eta, replica) on `workers` threads. Results do not
/// depend on the number of workers. Run failures are recorded per row.
SweepResult run_sweep(const SweepSpec& spec, const RunConfig& base, int workers,
                      OperatorTableCache& tables, const ProgressCallback& progress = nullptr);

/// sweep.csv (one row per run) and sweep_summary.csv (medians per point).
void write_sweep(const SweepResult& result, const SweepSpec& spec, const RunConfig& base,
                 const std::filesystem::path& dir);

/// A parameter error is relative for g, beta, gamma and eta (eta is capped
/// at 1) and a fraction of a full turn for drive_phase.
ModelParams apply_parameter_error(const ModelParams& params, const std::string& name,
                                  double relative_error);

struct MismatchSpec {
  RunConfig truth{};
  std::vector<std::pair<std::string, double>> errors{
      {"g", 0.05}, {"beta", 0.05}, {"gamma", 0.05}, {"eta", 0.05}, {"drive_phase", 0.05}};
  bool both_signs = true;  ///< also run -error for every entry
  bool joint = true;       ///< also run all errors at once
  int trace_samples_per_cycle = 4;

  void validate() const;
};

struct MismatchRow {
  std::string parameter;  ///< "none", a parameter name, or "joint"
  double relative_error = 0.0;
  ModelParams filter_params{};
  std::string status;
  std::string message;
  LyapunovExponents exponents{};
  double mean_trace_distance = 0.0;  ///< truth vs filter, after the burn-in
  double mean_purity = 0.0;
  TrajectoryRecord record;  ///< filter record (same sampling as the truth)

  bool ok() const { return status == "ok"; }
};

struct MismatchResult {
  SimulationResult truth;
  std::vector<MismatchRow> rows;  ///< first row is the matched filter
};

/// Runs the truth and every filter in lockstep: each step the truth draws a
/// Wiener increment, and its record increment drives every filter. Filters
/// start from the truth's initial state.
MismatchResult run_mismatch(const MismatchSpec& spec, OperatorTableCache& tables,
                            const ProgressCallback& progress = nullptr);

/// mismatch.csv plus the truth's trajectory.csv and summary.json.
void write_mismatch(const MismatchResult& result, const MismatchSpec& spec,
                    const std::filesystem::path& dir);

struct ClassicalConfig {
  ModelParams model{};
  long cycles = 1000;
  int steps_per_cycle = 1000;
  int renorm_stride = 10;
  double burn_in_cycles = 10.0;
  ClassicalState initial{1.0, 0.0};
  int samples_per_cycle = 20;
  std::string output_dir = "qduffing_out";

  void validate() const;
};

ClassicalLyapunovResult run_classical(const ClassicalConfig& config);

/// classical.csv (t, x, y) and classical_summary.json.
void write_classical(const ClassicalLyapunovResult& result, const ClassicalConfig& config,
                     const std::filesystem::path& dir);

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitPartialSweep = 4,
};

/// Maps an exception from any harness call to its exit code.
int exit_code_for(const std::exception& error);

/// Median of a non-empty sample (mean of the middle pair for even sizes).
double median(std::vector<double> values);

}  // namespace qduffing
