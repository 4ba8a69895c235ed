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


#include "qduffing/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "output.hpp"
#include "qduffing/errors.hpp"

namespace qduffing {

namespace {

using Json = nlohmann::ordered_json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Json model_object(const ModelParams& m) {
  Json j;
  j["beta"] = m.beta;
  j["g"] = m.g;
  j["gamma"] = m.gamma;
  j["eta"] = m.eta;
  j["drive_phase"] = m.drive_phase;
  j["lindblad_kind"] = to_string(m.lindblad_kind);
  return j;
}

Json config_object(const RunConfig& c) {
  Json j = model_object(c.model);
  j["dim"] = c.dim;
  j["steps_per_cycle"] = c.steps_per_cycle;
  j["cycles"] = c.cycles;
  j["seed"] = c.seed;
  j["recenter_threshold"] = c.recenter.threshold;
  j["tail_levels"] = c.recenter.tail_levels;
  j["tail_tolerance"] = c.recenter.tail_tolerance;
  j["epsilon"] = c.lyapunov.epsilon;
  j["renorm_stride"] = c.lyapunov.renorm_stride;
  j["burn_in_cycles"] = c.lyapunov.burn_in_cycles;
  j["output_dir"] = c.output_dir;
  j["output_stride"] = c.output_stride;
  j["scheme"] = to_string(c.scheme);
  j["adaptive_basis"] = c.adaptive_basis;
  return j;
}

Json exponents_object(const LyapunovExponents& e) {
  return Json{{"lambda_plus", e.plus}, {"lambda_minus", e.minus}};
}

double get_number(const Json& value, const std::string& key) {
  if (!value.is_number()) throw ConfigError(key, "expected a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
  return v;
}

long get_integer(const Json& value, const std::string& key) {
  if (!value.is_number_integer()) throw ConfigError(key, "expected an integer");
  if (value.is_number_unsigned() &&
      value.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<long>::max())) {
    throw ConfigError(key, "out of range");
  }
  return value.get<long>();
}

int get_int(const Json& value, const std::string& key) {
  const long v = get_integer(value, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(key, "out of range");
  }
  return static_cast<int>(v);
}

std::string get_string(const Json& value, const std::string& key) {
  if (!value.is_string()) throw ConfigError(key, "expected a string");
  return value.get<std::string>();
}

// Number of steps per drive period for a given dt, or ConfigError when dt
// does not divide 2 pi.
int steps_for_dt(double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "must be > 0");
  const double n = std::round(kTwoPi / dt);
  if (n < 1.0 || n > std::numeric_limits<int>::max() || std::abs(n * dt - kTwoPi) > 1e-9) {
    throw ConfigError("dt", "must divide 2*pi into an integer number of steps");
  }
  return static_cast<int>(n);
}

double burn_in_time(const LyapunovSchedule& s) { return s.burn_in_cycles * kTwoPi; }

double mean_after(const std::vector<double>& times, const std::vector<double>& values,
                  double t0) {
  double sum = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (times[i] >= t0) {
      sum += values[i];
      ++count;
    }
  }
  if (count == 0) {
    for (double v : values) sum += v;
    count = static_cast<long>(values.size());
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

long running_stride_for(const RunConfig& c) {
  // About ten running estimates per drive cycle.
  return std::max<long>(1, c.steps_per_cycle / (10L * c.lyapunov.renorm_stride));
}

std::string status_of(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return to_string(err->kind());
  return "error";
}

std::string trajectory_csv(const TrajectoryRecord& r, const std::string& comment) {
  output::CsvBuilder csv(comment, {"t", "dy", "mean_q", "mean_p", "purity", "q0", "p0", "dim_used"});
  for (std::size_t i = 0; i < r.size(); ++i) {
    csv.cell(r.times[i]).cell(r.dy[i]).cell(r.mean_q[i]).cell(r.mean_p[i]).cell(r.purity[i]);
    csv.cell(r.q0[i]).cell(r.p0[i]).cell(r.dim_used[i]);
    csv.end_row();
  }
  return csv.str();
}

std::filesystem::path output_root(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

// Truth-frame trace distance between two runners' states: the filter state is
// padded to a common block and displaced by the frame difference.
double frame_trace_distance(const TrajectoryRunner& truth, const TrajectoryRunner& filter,
                            OperatorTableCache& tables) {
  const int common = std::max(truth.rho().dim(), filter.rho().dim());
  const int dim = std::min(std::max(truth.max_dim(), filter.max_dim()), common + 16);
  DensityMatrix a = resize_state(truth.rho(), dim);
  DensityMatrix b = resize_state(filter.rho(), dim);
  const Complex shift = filter.frame().alpha() - truth.frame().alpha();
  if (shift != Complex(0.0, 0.0)) {
    const auto table = tables.get(dim);
    b = DensityMatrix::unchecked(hermitize(displace(b.matrix(), shift, *table)));
  }
  return trace_distance(a, b);
}

}  // namespace

int default_dim(double beta) {
  if (beta >= 0.5) return 80;
  if (beta >= 0.2) return 150;
  return 200;
}

int default_steps_per_cycle(double beta) { return beta >= 0.3 ? 3000 : 6000; }

void RunConfig::validate() const {
  model.validate();
  if (dim != 0 && dim < 2) throw ConfigError("dim", "must be >= 2 (or 0 for the default)");
  if (steps_per_cycle < 0) throw ConfigError("steps_per_cycle", "must be >= 1 (or 0 for the default)");
  if (cycles < 1) throw ConfigError("cycles", "must be >= 1");
  recenter.validate();
  if (dim != 0 && recenter.tail_levels >= dim) throw ConfigError("tail_levels", "must be < dim");
  if (!(lyapunov.epsilon > 0.0) || !std::isfinite(lyapunov.epsilon)) {
    throw ConfigError("epsilon", "must be finite and > 0");
  }
  if (lyapunov.renorm_stride < 1) throw ConfigError("renorm_stride", "must be >= 1");
  if (!(lyapunov.burn_in_cycles >= 0.0)) throw ConfigError("burn_in_cycles", "must be >= 0");
  if (lyapunov.burn_in_cycles >= static_cast<double>(cycles)) {
    throw ConfigError("burn_in_cycles", "must be smaller than cycles");
  }
  if (output_stride < 0) throw ConfigError("output_stride", "must be >= 0");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

RunConfig RunConfig::resolved() const {
  RunConfig r = *this;
  if (r.dim == 0) r.dim = default_dim(model.beta);
  if (r.steps_per_cycle == 0) r.steps_per_cycle = default_steps_per_cycle(model.beta);
  if (r.output_stride == 0) r.output_stride = std::max(1, r.steps_per_cycle / 50);
  r.validate();
  return r;
}

double RunConfig::dt() const {
  const int n = steps_per_cycle > 0 ? steps_per_cycle : default_steps_per_cycle(model.beta);
  return kTwoPi / n;
}

Schedule RunConfig::schedule() const {
  Schedule s;
  s.dt = dt();
  s.n_steps = n_steps();
  s.output_stride = output_stride;
  s.recenter = recenter;
  s.positivity_stride = steps_per_cycle;
  s.scheme = scheme;
  s.dim = dim;
  s.basis.adaptive = adaptive_basis;
  return s;
}

RunConfig parse_config(const std::string& json_text) {
  if (json_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ConfigError("config", "empty configuration");
  }
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");

  RunConfig c;
  bool have_dt = false;
  double dt = 0.0;
  bool have_steps = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "beta") c.model.beta = get_number(value, key);
    else if (key == "g") c.model.g = get_number(value, key);
    else if (key == "gamma") c.model.gamma = get_number(value, key);
    else if (key == "eta") c.model.eta = get_number(value, key);
    else if (key == "drive_phase") c.model.drive_phase = get_number(value, key);
    else if (key == "lindblad_kind") {
      try {
        c.model.lindblad_kind = lindblad_kind_from_string(get_string(value, key));
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "dim") c.dim = get_int(value, key);
    else if (key == "steps_per_cycle") {
      c.steps_per_cycle = get_int(value, key);
      have_steps = true;
    } else if (key == "dt") {
      dt = get_number(value, key);
      have_dt = true;
    } else if (key == "cycles") c.cycles = get_integer(value, key);
    else if (key == "seed") {
      if (!value.is_number_integer() || (!value.is_number_unsigned() && value.get<long>() < 0)) {
        throw ConfigError(key, "expected a non-negative integer");
      }
      c.seed = value.get<std::uint64_t>();
    } else if (key == "recenter_threshold") c.recenter.threshold = get_number(value, key);
    else if (key == "tail_levels") c.recenter.tail_levels = get_int(value, key);
    else if (key == "tail_tolerance") c.recenter.tail_tolerance = get_number(value, key);
    else if (key == "epsilon") c.lyapunov.epsilon = get_number(value, key);
    else if (key == "renorm_stride") c.lyapunov.renorm_stride = get_int(value, key);
    else if (key == "burn_in_cycles") c.lyapunov.burn_in_cycles = get_number(value, key);
    else if (key == "output_dir") c.output_dir = get_string(value, key);
    else if (key == "output_stride") c.output_stride = get_int(value, key);
    else if (key == "scheme") c.scheme = step_scheme_from_string(get_string(value, key));
    else if (key == "adaptive_basis") {
      if (!value.is_boolean()) throw ConfigError(key, "expected true or false");
      c.adaptive_basis = value.get<bool>();
    } else {
      throw ConfigError(key, "unknown field");
    }
  }
  if (have_dt) {
    const int n = steps_for_dt(dt);
    if (have_steps && c.steps_per_cycle != n) {
      throw ConfigError("dt", "inconsistent with steps_per_cycle");
    }
    c.steps_per_cycle = n;
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const RunConfig& config) { return config_object(config).dump(2); }

std::vector<std::pair<std::string, std::string>> config_field_help() {
  return {
      {"beta", "classicality scale, > 0 (default 0.1)"},
      {"g", "drive amplitude coefficient, >= 0 (default 0.3)"},
      {"gamma", "damping and measurement rate, > 0 (default 0.125)"},
      {"eta", "measurement efficiency in [0, 1] (default 1)"},
      {"drive_phase", "phase of the drive cos(t + phase) (default 0)"},
      {"lindblad_kind", "annihilation or position (default annihilation)"},
      {"dim", "Fock basis size, 0 picks 80/150/200 by beta (default 0)"},
      {"steps_per_cycle", "steps per drive period, 0 picks 3000/6000 by beta (default 0)"},
      {"dt", "time step; must divide 2*pi, alternative to steps_per_cycle"},
      {"cycles", "number of drive periods (default 100)"},
      {"seed", "noise seed (default 1)"},
      {"recenter_threshold", "re-centre the basis when |alpha| exceeds this (default 0.5)"},
      {"tail_levels", "top Fock levels monitored for truncation (default 5)"},
      {"tail_tolerance", "tail population warning level; abort at 100x (default 1e-6)"},
      {"epsilon", "finite-difference shift for the Jacobian (default 1e-3)"},
      {"renorm_stride", "steps between Gram-Schmidt passes (default 10)"},
      {"burn_in_cycles", "drive periods discarded before averaging (default 10)"},
      {"output_dir", "directory for output files (default qduffing_out)"},
      {"output_stride", "steps between trajectory samples, 0 gives 50 per cycle (default 0)"},
      {"scheme", "cayley or explicit (default cayley)"},
      {"adaptive_basis", "step on the smallest safe block of the basis (default true)"},
  };
}

SimulationResult run_simulation(const RunConfig& config, OperatorTableCache& tables) {
  SimulationResult result;
  result.config = config.resolved();
  const RunConfig& c = result.config;

  const InitialState initial = default_initial_state(c.model, c.dim);
  QuantumLyapunovEstimator estimator(c.lyapunov, running_stride_for(c));
  result.record = simulate_trajectory(initial, c.model, c.schedule(), c.seed, tables,
                                      estimator.observer());
  result.exponents = estimator.result();
  result.running = estimator.running();
  result.mean_purity =
      mean_after(result.record.times, result.record.purity, burn_in_time(c.lyapunov));
  result.final_purity = result.record.purity.empty() ? 0.0 : result.record.purity.back();
  return result;
}

std::string simulation_summary_json(const SimulationResult& result) {
  const TrajectoryRecord& r = result.record;
  Json j;
  j["lambda_plus"] = result.exponents.plus;
  j["lambda_minus"] = result.exponents.minus;
  j["mean_purity"] = result.mean_purity;
  j["final_purity"] = result.final_purity;
  j["max_tail_population"] = r.max_tail_population;
  j["tail_warnings"] = r.tail_warnings;
  j["recenter_count"] = r.recenter_count;
  j["min_eigenvalue"] = r.min_eigenvalue;
  j["max_dim_used"] = r.dim_used.empty() ? 0 : *std::max_element(r.dim_used.begin(), r.dim_used.end());
  j["steps"] = result.config.n_steps();
  j["seed"] = result.config.seed;
  j["config"] = config_object(result.config);
  return j.dump(2) + "\n";
}

void write_simulation(const SimulationResult& result, const std::filesystem::path& dir) {
  const auto root = output_root(dir);
  const std::string comment = config_object(result.config).dump();
  output::write_file(root / "trajectory.csv", trajectory_csv(result.record, comment));

  output::CsvBuilder lyap(comment, {"t", "lambda_plus_running", "lambda_minus_running"});
  for (const RunningEstimate& e : result.running) {
    lyap.cell(e.t).cell(e.lambda_plus).cell(e.lambda_minus);
    lyap.end_row();
  }
  output::write_file(root / "lyapunov.csv", lyap.str());
  output::write_file(root / "summary.json", simulation_summary_json(result));
}

void SweepSpec::validate() const {
  if (beta_list.empty()) throw ConfigError("beta_list", "must not be empty");
  if (eta_list.empty()) throw ConfigError("eta_list", "must not be empty");
  for (double b : beta_list) {
    if (!std::isfinite(b) || b <= 0.0) throw ConfigError("beta_list", "values must be > 0");
  }
  for (double e : eta_list) {
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eta_list", "values must lie in [0, 1]");
  }
  if (trajectories_per_point < 1) throw ConfigError("trajectories_per_point", "must be >= 1");
}

double SweepResult::success_fraction() const {
  if (rows.empty()) return 0.0;
  const auto ok = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); });
  return static_cast<double>(ok) / static_cast<double>(rows.size());
}

RunConfig sweep_run_config(const RunConfig& base, const SweepSpec& spec, double beta, double eta,
                           int replica) {
  RunConfig c = base;
  c.model.beta = beta;
  c.model.eta = eta;
  c.seed = derive_seed(spec.base_seed, static_cast<std::uint64_t>(replica));
  return c.resolved();
}

SweepResult run_sweep(const SweepSpec& spec, const RunConfig& base, int workers,
                      OperatorTableCache& tables, const ProgressCallback& progress) {
  spec.validate();
  base.validate();

  SweepResult result;
  for (double beta : spec.beta_list) {
    for (double eta : spec.eta_list) {
      for (int r = 0; r < spec.trajectories_per_point; ++r) {
        const RunConfig c = sweep_run_config(base, spec, beta, eta, r);
        SweepRow row;
        row.beta = beta;
        row.eta = eta;
        row.replica = r;
        row.seed = c.seed;
        row.dim = c.dim;
        row.steps_per_cycle = c.steps_per_cycle;
        result.rows.push_back(row);
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  const std::size_t total = result.rows.size();
  auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      SweepRow& row = result.rows[i];
      try {
        const SimulationResult sim =
            run_simulation(sweep_run_config(base, spec, row.beta, row.eta, row.replica), tables);
        row.exponents = sim.exponents;
        row.mean_purity = sim.mean_purity;
        row.status = "ok";
      } catch (const std::exception& e) {
        row.status = status_of(e);
        row.message = e.what();
        row.exponents = {std::nan(""), std::nan("")};
        row.mean_purity = std::nan("");
      }
      const std::size_t finished = ++done;
      if (progress) {
        std::ostringstream msg;
        msg << "[" << finished << "/" << total << "] beta=" << row.beta << " eta=" << row.eta
            << " replica=" << row.replica << " " << row.status;
        if (row.ok()) msg << " lambda_plus=" << row.exponents.plus;
        std::lock_guard lock(progress_mutex);
        progress(msg.str());
      }
    }
  };

  const int n_threads = std::clamp<int>(workers, 1, static_cast<int>(std::max<std::size_t>(1, total)));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < n_threads; ++w) pool.emplace_back(work);
    work();
  }

  for (double beta : spec.beta_list) {
    for (double eta : spec.eta_list) {
      SweepPoint p;
      p.beta = beta;
      p.eta = eta;
      std::vector<double> plus, minus, pur;
      for (const SweepRow& row : result.rows) {
        if (row.beta != beta || row.eta != eta) continue;
        ++p.runs;
        if (!row.ok()) continue;
        ++p.succeeded;
        plus.push_back(row.exponents.plus);
        minus.push_back(row.exponents.minus);
        pur.push_back(row.mean_purity);
      }
      const double nan = std::nan("");
      p.median_lambda_plus = plus.empty() ? nan : median(plus);
      p.median_lambda_minus = minus.empty() ? nan : median(minus);
      p.median_mean_purity = pur.empty() ? nan : median(pur);
      result.points.push_back(p);
    }
  }
  return result;
}

void write_sweep(const SweepResult& result, const SweepSpec& spec, const RunConfig& base,
                 const std::filesystem::path& dir) {
  const auto root = output_root(dir);
  Json header = config_object(base);
  header["beta_list"] = spec.beta_list;
  header["eta_list"] = spec.eta_list;
  header["trajectories_per_point"] = spec.trajectories_per_point;
  header["base_seed"] = spec.base_seed;
  const std::string comment = header.dump();

  output::CsvBuilder rows(comment, {"beta", "eta", "replica", "seed", "dim", "steps_per_cycle",
                                    "status", "lambda_plus", "lambda_minus", "mean_purity",
                                    "message"});
  for (const SweepRow& r : result.rows) {
    rows.cell(r.beta).cell(r.eta).cell(r.replica).cell(static_cast<unsigned long long>(r.seed));
    rows.cell(r.dim).cell(r.steps_per_cycle).cell(r.status);
    rows.cell(r.exponents.plus).cell(r.exponents.minus).cell(r.mean_purity).cell(r.message);
    rows.end_row();
  }
  output::write_file(root / "sweep.csv", rows.str());

  output::CsvBuilder points(comment, {"beta", "eta", "runs", "succeeded", "median_lambda_plus",
                                      "median_lambda_minus", "median_mean_purity"});
  for (const SweepPoint& p : result.points) {
    points.cell(p.beta).cell(p.eta).cell(p.runs).cell(p.succeeded);
    points.cell(p.median_lambda_plus).cell(p.median_lambda_minus).cell(p.median_mean_purity);
    points.end_row();
  }
  output::write_file(root / "sweep_summary.csv", points.str());
}

ModelParams apply_parameter_error(const ModelParams& params, const std::string& name,
                                  double relative_error) {
  ModelParams p = params;
  const double f = 1.0 + relative_error;
  if (name == "g") p.g *= f;
  else if (name == "beta") p.beta *= f;
  else if (name == "gamma") p.gamma *= f;
  else if (name == "eta") p.eta = std::min(1.0, p.eta * f);
  else if (name == "drive_phase") p.drive_phase += relative_error * kTwoPi;
  else throw ConfigError("errors", "unknown parameter '" + name + "'");
  return p;
}

void MismatchSpec::validate() const {
  truth.validate();
  for (const auto& [name, error] : errors) {
    if (!std::isfinite(error) || std::abs(error) > 0.5) {
      throw ConfigError("errors", "relative error for '" + name + "' must lie in [-0.5, 0.5]");
    }
    apply_parameter_error(truth.model, name, error).validate();
  }
  if (trace_samples_per_cycle < 1) throw ConfigError("trace_samples_per_cycle", "must be >= 1");
}

MismatchResult run_mismatch(const MismatchSpec& spec, OperatorTableCache& tables,
                            const ProgressCallback& progress) {
  spec.validate();
  MismatchResult result;
  result.truth.config = spec.truth.resolved();
  const RunConfig& c = result.truth.config;
  const Schedule schedule = c.schedule();

  // Filter parameter sets: matched, each error alone, then all at once.
  std::vector<MismatchRow> rows;
  auto add_row = [&](const std::string& name, double error, const ModelParams& p) {
    MismatchRow row;
    row.parameter = name;
    row.relative_error = error;
    row.filter_params = p;
    rows.push_back(std::move(row));
  };
  add_row("none", 0.0, c.model);
  const std::vector<double> signs = spec.both_signs ? std::vector<double>{1.0, -1.0}
                                                    : std::vector<double>{1.0};
  for (const auto& [name, error] : spec.errors) {
    for (double s : signs) add_row(name, s * error, apply_parameter_error(c.model, name, s * error));
  }
  if (spec.joint && !spec.errors.empty()) {
    double largest = 0.0;
    for (const auto& e : spec.errors) largest = std::max(largest, std::abs(e.second));
    for (double s : signs) {
      ModelParams p = c.model;
      for (const auto& [name, error] : spec.errors) p = apply_parameter_error(p, name, s * error);
      add_row("joint", s * largest, p);
    }
  }

  const InitialState initial = default_initial_state(c.model, c.dim);
  TrajectoryRunner truth(initial, c.model, schedule, tables, c.seed);
  QuantumLyapunovEstimator truth_lyap(c.lyapunov, running_stride_for(c));
  truth.set_observer(truth_lyap.observer());

  struct Filter {
    std::unique_ptr<TrajectoryRunner> runner;
    std::unique_ptr<QuantumLyapunovEstimator> lyap;
    double distance_sum = 0.0;
    long distance_count = 0;
    bool alive = true;
  };
  std::vector<Filter> filters(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    filters[k].runner =
        std::make_unique<TrajectoryRunner>(initial, rows[k].filter_params, schedule, tables, c.seed);
    filters[k].lyap = std::make_unique<QuantumLyapunovEstimator>(c.lyapunov, running_stride_for(c));
    filters[k].runner->set_observer(filters[k].lyap->observer());
  }

  GaussianSource noise(c.seed);
  const long trace_stride = std::max(1, c.steps_per_cycle / spec.trace_samples_per_cycle);
  const double t_burn = burn_in_time(c.lyapunov);
  for (long n = 0; n < schedule.n_steps; ++n) {
    const double dy = truth.step(noise.next(schedule.dt));
    const bool measure = (n + 1) % trace_stride == 0 && truth.time() >= t_burn;
    for (std::size_t k = 0; k < filters.size(); ++k) {
      Filter& f = filters[k];
      if (!f.alive) continue;
      try {
        f.runner->step_with_record(dy);
        if (measure) {
          f.distance_sum += frame_trace_distance(truth, *f.runner, tables);
          ++f.distance_count;
        }
      } catch (const std::exception& e) {
        f.alive = false;
        rows[k].status = status_of(e);
        rows[k].message = e.what();
      }
    }
    if (progress && (n + 1) % c.steps_per_cycle == 0) {
      progress("cycle " + std::to_string((n + 1) / c.steps_per_cycle) + "/" +
               std::to_string(c.cycles));
    }
  }

  result.truth.record = truth.take_record();
  result.truth.exponents = truth_lyap.result();
  result.truth.running = truth_lyap.running();
  result.truth.mean_purity = mean_after(result.truth.record.times, result.truth.record.purity, t_burn);
  result.truth.final_purity =
      result.truth.record.purity.empty() ? 0.0 : result.truth.record.purity.back();

  const double nan = std::nan("");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Filter& f = filters[k];
    MismatchRow& row = rows[k];
    row.record = f.runner->take_record();
    if (!f.alive) {
      row.exponents = {nan, nan};
      row.mean_trace_distance = nan;
      row.mean_purity = nan;
      continue;
    }
    row.status = "ok";
    row.exponents = f.lyap->result();
    row.mean_trace_distance =
        f.distance_count ? f.distance_sum / static_cast<double>(f.distance_count) : 0.0;
    row.mean_purity = mean_after(row.record.times, row.record.purity, t_burn);
  }
  result.rows = std::move(rows);
  return result;
}

void write_mismatch(const MismatchResult& result, const MismatchSpec& spec,
                    const std::filesystem::path& dir) {
  const auto root = output_root(dir);
  write_simulation(result.truth, root);

  Json header = config_object(result.truth.config);
  Json errors = Json::object();
  for (const auto& [name, error] : spec.errors) errors[name] = error;
  header["errors"] = errors;
  header["both_signs"] = spec.both_signs;
  header["joint"] = spec.joint;
  output::CsvBuilder csv(header.dump(),
                         {"perturbed_parameter", "relative_error", "beta", "g", "gamma", "eta",
                          "drive_phase", "lambda_plus_filter", "lambda_minus_filter",
                          "lambda_plus_truth", "lambda_minus_truth", "mean_trace_distance",
                          "mean_purity", "status"});
  for (const MismatchRow& r : result.rows) {
    const ModelParams& p = r.filter_params;
    csv.cell(r.parameter).cell(r.relative_error);
    csv.cell(p.beta).cell(p.g).cell(p.gamma).cell(p.eta).cell(p.drive_phase);
    csv.cell(r.exponents.plus).cell(r.exponents.minus);
    csv.cell(result.truth.exponents.plus).cell(result.truth.exponents.minus);
    csv.cell(r.mean_trace_distance).cell(r.mean_purity).cell(r.status);
    csv.end_row();
  }
  output::write_file(root / "mismatch.csv", csv.str());
}

void ClassicalConfig::validate() const {
  model.validate();
  if (cycles < 1) throw ConfigError("cycles", "must be >= 1");
  if (steps_per_cycle < 1) throw ConfigError("steps_per_cycle", "must be >= 1");
  if (renorm_stride < 1) throw ConfigError("renorm_stride", "must be >= 1");
  if (!(burn_in_cycles >= 0.0) || burn_in_cycles >= static_cast<double>(cycles)) {
    throw ConfigError("burn_in_cycles", "must lie in [0, cycles)");
  }
  if (!std::isfinite(initial.x) || !std::isfinite(initial.y)) {
    throw ConfigError("initial", "must be finite");
  }
  if (samples_per_cycle < 0) throw ConfigError("samples_per_cycle", "must be >= 0");
}

ClassicalLyapunovResult run_classical(const ClassicalConfig& config) {
  config.validate();
  ClassicalLyapunovOptions options;
  options.renorm_stride = config.renorm_stride;
  options.burn_in = config.burn_in_cycles * kTwoPi;
  options.initial = config.initial;
  options.sample_stride =
      config.samples_per_cycle > 0 ? std::max(1, config.steps_per_cycle / config.samples_per_cycle) : 0;
  const double dt = kTwoPi / config.steps_per_cycle;
  return classical_lyapunov(config.model, static_cast<double>(config.cycles) * kTwoPi, dt, options);
}

void write_classical(const ClassicalLyapunovResult& result, const ClassicalConfig& config,
                     const std::filesystem::path& dir) {
  const auto root = output_root(dir);
  Json header = model_object(config.model);
  header["cycles"] = config.cycles;
  header["steps_per_cycle"] = config.steps_per_cycle;
  header["renorm_stride"] = config.renorm_stride;
  header["burn_in_cycles"] = config.burn_in_cycles;
  header["initial"] = {config.initial.x, config.initial.y};

  output::CsvBuilder csv(header.dump(), {"t", "x", "y"});
  for (const ClassicalSample& s : result.samples) {
    csv.cell(s.t).cell(s.x).cell(s.y);
    csv.end_row();
  }
  output::write_file(root / "classical.csv", csv.str());

  Json summary = exponents_object(result.exponents);
  summary["lambda_sum"] = result.exponents.plus + result.exponents.minus;
  summary["config"] = header;
  output::write_file(root / "classical_summary.json", summary.dump(2) + "\n");
}

int exit_code_for(const std::exception& error) {
  const auto* err = dynamic_cast<const Error*>(&error);
  if (!err) return kExitFailure;
  if (err->is_numerical()) return kExitNumerical;
  switch (err->kind()) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kInvalidDimension:
      return kExitConfig;
    default:
      return kExitFailure;
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::kInvalidArgument, "median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace qduffing
