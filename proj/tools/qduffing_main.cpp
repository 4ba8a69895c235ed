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


// qduffing: command-line front end for single trajectories, parameter
// sweeps, the mismatched-filter experiment and the classical reference.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "qduffing/errors.hpp"
#include "qduffing/harness.hpp"

namespace {

using namespace qduffing;

struct Overrides {
  std::string config;
  std::optional<double> beta, eta, g, gamma;
  std::optional<int> dim, steps_per_cycle;
  std::optional<long> cycles;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "flat JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--beta", o.beta, "classicality scale");
  cmd->add_option("--eta", o.eta, "measurement efficiency");
  cmd->add_option("--g", o.g, "drive amplitude coefficient");
  cmd->add_option("--gamma", o.gamma, "damping / measurement rate");
  cmd->add_option("--dim", o.dim, "Fock basis size");
  cmd->add_option("--dt-steps-per-cycle", o.steps_per_cycle, "steps per drive period");
  cmd->add_option("--cycles", o.cycles, "drive periods");
  cmd->add_option("--seed", o.seed, "noise seed");
  cmd->add_option("--out", o.out, "output directory");
}

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.beta) c.model.beta = *o.beta;
  if (o.eta) c.model.eta = *o.eta;
  if (o.g) c.model.g = *o.g;
  if (o.gamma) c.model.gamma = *o.gamma;
  if (o.dim) c.dim = *o.dim;
  if (o.steps_per_cycle) {
    if (*o.steps_per_cycle < 1) throw ConfigError("steps_per_cycle", "must be >= 1");
    c.steps_per_cycle = *o.steps_per_cycle;
  }
  if (o.cycles) c.cycles = *o.cycles;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  c.validate();
  return c;
}

int resolve_workers(const Overrides& o) {
  if (o.workers) return *o.workers;
  if (const char* env = std::getenv("QDUFFING_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError("QDUFFING_WORKERS", "must be a positive integer");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void print_progress(const std::string& line) { std::cerr << line << '\n'; }

std::string config_help() {
  std::string text = "Config fields (flat JSON):\n";
  for (const auto& [name, doc] : config_field_help()) text += "  " + name + ": " + doc + "\n";
  return text;
}

int report(const std::exception& e) {
  const int code = exit_code_for(e);
  std::cerr << "error: " << e.what() << '\n';
  if (code == kExitNumerical) {
    std::cerr << "the integration became unstable; try a larger --dim or more "
                 "--dt-steps-per-cycle\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuously monitored quantum Duffing oscillator"};
  app.require_subcommand(1);
  app.footer(config_help());

  Overrides sim_opts;
  auto* simulate = app.add_subcommand("simulate", "run one trajectory with Lyapunov estimation");
  add_common(simulate, sim_opts);

  Overrides sweep_opts;
  SweepSpec sweep_spec;
  auto* sweep = app.add_subcommand("sweep", "run a (beta, eta) grid of trajectories");
  add_common(sweep, sweep_opts);
  sweep->add_option("--workers", sweep_opts.workers, "parallel runs (env QDUFFING_WORKERS)")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--beta-list", sweep_spec.beta_list, "beta values")->delimiter(',');
  sweep->add_option("--eta-list", sweep_spec.eta_list, "eta values")->delimiter(',');
  sweep->add_option("--trajectories", sweep_spec.trajectories_per_point, "runs per grid point");
  sweep->add_option("--base-seed", sweep_spec.base_seed, "seed of replica streams");

  Overrides mis_opts;
  double mis_error = 0.05;
  bool single_sign = false;
  bool no_joint = false;
  auto* mismatch = app.add_subcommand("mismatch", "feed a simulated record to mismatched filters");
  add_common(mismatch, mis_opts);
  mismatch->add_option("--error", mis_error, "relative error applied to each parameter");
  mismatch->add_flag("--single-sign", single_sign, "only apply +error");
  mismatch->add_flag("--no-joint", no_joint, "skip the all-parameters-at-once filter");

  Overrides cls_opts;
  auto* classical = app.add_subcommand("classical", "classical limit and its Lyapunov exponents");
  add_common(classical, cls_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    OperatorTableCache tables;
    if (*simulate) {
      const RunConfig config = build_config(sim_opts);
      const SimulationResult result = run_simulation(config, tables);
      write_simulation(result, result.config.output_dir);
      std::cout << simulation_summary_json(result);
      return kExitOk;
    }
    if (*sweep) {
      const RunConfig base = build_config(sweep_opts);
      const SweepResult result = run_sweep(sweep_spec, base, resolve_workers(sweep_opts), tables,
                                           print_progress);
      write_sweep(result, sweep_spec, base, base.output_dir);
      for (const SweepPoint& p : result.points) {
        std::cout << "beta=" << p.beta << " eta=" << p.eta << " ok=" << p.succeeded << "/"
                  << p.runs << " median_lambda_plus=" << p.median_lambda_plus
                  << " median_mean_purity=" << p.median_mean_purity << '\n';
      }
      return result.success_fraction() >= 0.9 ? kExitOk : kExitPartialSweep;
    }
    if (*mismatch) {
      MismatchSpec spec;
      spec.truth = build_config(mis_opts);
      for (auto& entry : spec.errors) entry.second = mis_error;
      spec.both_signs = !single_sign;
      spec.joint = !no_joint;
      const MismatchResult result = run_mismatch(spec, tables, print_progress);
      write_mismatch(result, spec, spec.truth.output_dir);
      std::cout << "truth lambda_plus=" << result.truth.exponents.plus << '\n';
      for (const MismatchRow& r : result.rows) {
        std::cout << r.parameter << " " << r.relative_error << " " << r.status
                  << " lambda_plus=" << r.exponents.plus
                  << " trace_distance=" << r.mean_trace_distance << '\n';
      }
      return kExitOk;
    }
    if (*classical) {
      ClassicalConfig config;
      const RunConfig run = build_config(cls_opts);
      config.model = run.model;
      if (cls_opts.cycles) config.cycles = *cls_opts.cycles;
      if (cls_opts.steps_per_cycle) config.steps_per_cycle = *cls_opts.steps_per_cycle;
      config.output_dir = run.output_dir;
      const ClassicalLyapunovResult result = run_classical(config);
      write_classical(result, config, config.output_dir);
      std::cout << "lambda_plus=" << result.exponents.plus
                << " lambda_minus=" << result.exponents.minus
                << " sum=" << result.exponents.plus + result.exponents.minus << '\n';
      return kExitOk;
    }
  } catch (const std::exception& e) {
    return report(e);
  }
  return kExitFailure;
}
