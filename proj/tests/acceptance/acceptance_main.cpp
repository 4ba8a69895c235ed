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


// Acceptance runner: one PASS/FAIL line per criterion. Long trajectory runs
// are cached on disk, keyed by the resolved run config and a digest of the
// core library sources, so a rerun after an unchanged build is fast.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "checks.hpp"
#include "json.hpp"
#include "qduffing/harness.hpp"

#ifndef QDUFFING_CORE_DIGEST
#define QDUFFING_CORE_DIGEST "unknown"
#endif

namespace {

using namespace qduffing;
using Json = nlohmann::json;

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(2);
  s << v;
  return s.str();
}

class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  std::optional<Json> load(const std::string& key) const {
    if (dir_.empty()) return std::nullopt;
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    try {
      Json j = Json::parse(in);
      if (j.value("key", "") != full_key(key)) return std::nullopt;
      return j["value"];
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void store(const std::string& key, const Json& value) const {
    if (dir_.empty()) return;
    const auto target = path_for(key);
    const auto temp = target.string() + ".tmp";
    {
      std::ofstream out(temp);
      out << Json{{"key", full_key(key)}, {"value", value}}.dump(1);
    }
    std::filesystem::rename(temp, target);
  }

 private:
  static std::string full_key(const std::string& key) {
    return std::string(QDUFFING_CORE_DIGEST) + "\n" + key;
  }

  std::filesystem::path path_for(const std::string& key) const {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : full_key(key)) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    std::ostringstream name;
    name << std::hex << h << ".json";
    return dir_ / name.str();
  }

  std::filesystem::path dir_;
};

struct RunOutcome {
  RunConfig config;
  std::string status;
  std::string message;
  double lambda_plus = std::nan("");
  double lambda_minus = std::nan("");
  double mean_purity = std::nan("");

  bool ok() const { return status == "ok"; }
};

class Runner {
 public:
  Runner(ResultCache& cache, int workers) : cache_(cache), workers_(std::max(1, workers)) {}

  std::vector<RunOutcome> run(const std::vector<RunConfig>& configs) {
    std::vector<RunOutcome> out(configs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto work = [&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) {
        const RunConfig c = configs[i].resolved();
        const std::string key = config_to_json(c);
        RunOutcome& r = out[i];
        r.config = c;
        const auto start = std::chrono::steady_clock::now();
        bool cached = false;
        if (auto hit = cache_.load(key)) {
          cached = true;
          r.status = (*hit)["status"];
          r.message = (*hit)["message"];
          r.lambda_plus = (*hit)["lambda_plus"];
          r.lambda_minus = (*hit)["lambda_minus"];
          r.mean_purity = (*hit)["mean_purity"];
        } else {
          try {
            const SimulationResult sim = run_simulation(c, tables_);
            r.status = "ok";
            r.lambda_plus = sim.exponents.plus;
            r.lambda_minus = sim.exponents.minus;
            r.mean_purity = sim.mean_purity;
          } catch (const std::exception& e) {
            r.status = "failed";
            r.message = e.what();
          }
          cache_.store(key, Json{{"status", r.status},
                                 {"message", r.message},
                                 {"lambda_plus", r.lambda_plus},
                                 {"lambda_minus", r.lambda_minus},
                                 {"mean_purity", r.mean_purity}});
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::lock_guard lock(log_mutex);
        std::cerr << "  run beta=" << c.model.beta << " eta=" << c.model.eta << " seed=" << c.seed
                  << " cycles=" << c.cycles << " dim=" << c.dim << ": " << r.status
                  << " lambda_plus=" << r.lambda_plus << " mean_purity=" << r.mean_purity
                  << (cached ? " (cached)" : " (" + fixed(secs, 0) + " s)")
                  << (r.message.empty() ? "" : " " + r.message) << std::endl;
      }
    };
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers_; ++w) pool.emplace_back(work);
    work();
    return out;
  }

  OperatorTableCache& tables() { return tables_; }
  ResultCache& cache() { return cache_; }

 private:
  ResultCache& cache_;
  int workers_;
  OperatorTableCache tables_;
};

int failures = 0;

void report(const std::string& id, const std::string& title, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << title << "): " << detail
            << std::endl;
}

void skip(const std::string& id, const std::string& title, const std::string& why) {
  std::cout << "SKIP  criterion " << id << " (" << title << "): " << why << std::endl;
}

constexpr int kReplicas = 4;

RunConfig run_config(double beta, double eta, long cycles, int replica) {
  RunConfig base;
  base.cycles = cycles;
  SweepSpec spec;
  return sweep_run_config(base, spec, beta, eta, replica);
}

// Replica runs of one grid point and the median lambda_plus of the successful ones.
struct PointSummary {
  double beta = 0.0;
  double eta = 0.0;
  int succeeded = 0;
  double median_plus = std::nan("");
  std::vector<RunOutcome> runs;
};

std::vector<PointSummary> run_points(Runner& runner, const std::vector<std::pair<double, double>>& grid,
                                     long cycles) {
  std::vector<RunConfig> configs;
  for (const auto& [beta, eta] : grid) {
    for (int r = 0; r < kReplicas; ++r) configs.push_back(run_config(beta, eta, cycles, r));
  }
  const std::vector<RunOutcome> outcomes = runner.run(configs);
  std::vector<PointSummary> points;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    PointSummary p;
    p.beta = grid[g].first;
    p.eta = grid[g].second;
    std::vector<double> plus;
    for (int r = 0; r < kReplicas; ++r) {
      const RunOutcome& o = outcomes[g * kReplicas + r];
      p.runs.push_back(o);
      if (o.ok()) {
        ++p.succeeded;
        plus.push_back(o.lambda_plus);
      }
    }
    if (!plus.empty()) p.median_plus = median(plus);
    points.push_back(p);
  }
  return points;
}

std::string medians_text(const std::vector<PointSummary>& points) {
  std::string s;
  for (const auto& p : points) {
    if (!s.empty()) s += ", ";
    s += "beta=" + fixed(p.beta, 2) + ":" + fixed(p.median_plus) + " (" +
         std::to_string(p.succeeded) + "/" + std::to_string(kReplicas) + ")";
  }
  return s;
}

bool all_ok(const std::vector<PointSummary>& points) {
  return std::all_of(points.begin(), points.end(),
                     [](const PointSummary& p) { return p.succeeded == kReplicas; });
}

void criterion_1() {
  ClassicalConfig config;
  const ClassicalLyapunovResult r = run_classical(config);
  const double sum = r.exponents.plus + r.exponents.minus;
  const bool pass = r.exponents.plus > 0.02 && std::abs(sum + 0.25) <= 0.01;
  report("1", "classical chaos", pass,
         "lambda_plus=" + fixed(r.exponents.plus) + " (> 0.02), lambda_plus+lambda_minus=" +
             fixed(sum, 6) + " (-0.25 +/- 0.01)");
}

void criterion_2_smoke(Runner& runner) {
  const auto start = std::chrono::steady_clock::now();
  const auto points = run_points(runner, {{1.0, 1.0}, {0.1, 1.0}}, 30);
  const bool pass = all_ok(points) && points[0].median_plus < 0.0 && points[1].median_plus > 0.0;
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  report("2-smoke", "beta transition, 30 cycles", pass,
         "median lambda_plus " + medians_text(points) +
             "; need < 0 at beta=1.0, > 0 at beta=0.1; wall " + fixed(minutes, 1) + " min");
}

std::vector<PointSummary> criterion_2_full(Runner& runner) {
  const std::vector<double> betas{1.0, 0.5, 0.4, 0.3, 0.2, 0.1};
  std::vector<std::pair<double, double>> grid;
  for (double b : betas) grid.emplace_back(b, 1.0);
  const auto points = run_points(runner, grid, 100);
  auto m = [&](double beta) {
    for (const auto& p : points) {
      if (p.beta == beta) return p.median_plus;
    }
    return std::nan("");
  };
  const bool pass = all_ok(points) && m(1.0) < 0.0 && m(0.5) < 0.0 && m(0.2) > 0.0 &&
                    m(0.1) > 0.0 && m(0.4) < 0.0;
  report("2", "beta transition, 100 cycles", pass,
         "median lambda_plus " + medians_text(points) +
             "; need < 0 at beta>=0.4 and > 0 at beta<=0.2");
  return points;
}

std::vector<PointSummary> criterion_3(Runner& runner) {
  const auto points = run_points(runner, {{0.1, 0.2}, {0.1, 0.6}, {0.1, 1.0}}, 100);
  bool pass = all_ok(points);
  double worst = 0.0;
  for (const auto& a : points) {
    pass = pass && a.median_plus > 0.0;
    for (const auto& b : points) {
      const double mean = 0.5 * (a.median_plus + b.median_plus);
      worst = std::max(worst, std::abs(a.median_plus - b.median_plus) / std::abs(mean));
    }
  }
  pass = pass && worst <= 0.30;
  std::string detail;
  for (const auto& p : points) {
    detail += (detail.empty() ? "" : ", ") + std::string("eta=") + fixed(p.eta, 1) + ":" +
              fixed(p.median_plus);
  }
  report("3", "efficiency insensitivity at beta=0.1", pass,
         "median lambda_plus " + detail + "; largest pairwise relative spread " + fixed(worst, 3) +
             " (<= 0.30)");
  return points;
}

void criterion_4(const std::vector<PointSummary>& beta_sweep,
                 const std::vector<PointSummary>& eta_sweep) {
  double lowest = 1.0;
  bool pass = true;
  for (const auto& p : beta_sweep) {
    for (const auto& r : p.runs) {
      pass = pass && r.ok() && r.mean_purity >= 0.95;
      if (r.ok()) lowest = std::min(lowest, r.mean_purity);
    }
  }
  const PointSummary* low = nullptr;
  const PointSummary* high = nullptr;
  for (const auto& p : eta_sweep) {
    if (p.eta == 0.2) low = &p;
    if (p.eta == 1.0) high = &p;
  }
  std::string pairs;
  for (int r = 0; low && high && r < kReplicas; ++r) {
    const double a = low->runs[r].mean_purity;
    const double b = high->runs[r].mean_purity;
    pass = pass && low->runs[r].ok() && high->runs[r].ok() && a < b;
    pairs += (pairs.empty() ? "" : ", ") + fixed(a, 3) + "<" + fixed(b, 3);
  }
  if (!low || !high) pass = false;
  report("4", "purity asymptotics", pass,
         "lowest eta=1 mean purity " + fixed(lowest, 5) + " (>= 0.95); beta=0.1 eta=0.2 vs eta=1 "
         "per seed " + pairs);
}

void criterion_5(Runner& runner) {
  MismatchSpec spec;
  spec.truth.model.beta = 0.1;
  spec.truth.model.eta = 0.4;
  spec.truth.cycles = 40;
  spec.joint = false;
  const RunConfig truth = spec.truth.resolved();
  std::string key = "mismatch\n" + config_to_json(truth);
  for (const auto& [name, e] : spec.errors) key += "\n" + name + "=" + std::to_string(e);

  Json value;
  if (auto hit = runner.cache().load(key)) {
    value = *hit;
    std::cerr << "  mismatch run (cached)" << std::endl;
  } else {
    const auto start = std::chrono::steady_clock::now();
    try {
      const MismatchResult r = run_mismatch(spec, runner.tables(), [&](const std::string& line) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cerr << "  mismatch " << line << " (" << fixed(secs, 0) << " s)" << std::endl;
      });
      const MismatchRow& matched = r.rows.front();
      const TrajectoryRecord& a = r.truth.record;
      const TrajectoryRecord& b = matched.record;
      const bool identical =
          matched.ok() && a.times == b.times && a.dy == b.dy && a.mean_q == b.mean_q &&
          a.mean_p == b.mean_p && a.purity == b.purity && a.q0 == b.q0 && a.p0 == b.p0 &&
          a.dim_used == b.dim_used && matched.exponents.plus == r.truth.exponents.plus &&
          matched.exponents.minus == r.truth.exponents.minus && matched.mean_trace_distance == 0.0;
      value["status"] = "ok";
      value["truth_lambda_plus"] = r.truth.exponents.plus;
      value["matched_identical"] = identical;
      for (const MismatchRow& row : r.rows) {
        value["rows"].push_back({{"parameter", row.parameter},
                                 {"error", row.relative_error},
                                 {"status", row.status},
                                 {"lambda_plus", row.exponents.plus},
                                 {"trace_distance", row.mean_trace_distance}});
      }
    } catch (const std::exception& e) {
      value["status"] = "failed";
      value["message"] = e.what();
    }
    runner.cache().store(key, value);
  }

  if (value["status"] != "ok") {
    report("5", "mismatch robustness", false, "truth run failed: " + value.value("message", ""));
    return;
  }
  bool pass = value["matched_identical"].get<bool>();
  double min_plus = std::numeric_limits<double>::infinity();
  std::string detail;
  for (const auto& row : value["rows"]) {
    const std::string name = row["parameter"];
    if (name == "none") continue;
    const bool ok = row["status"] == "ok";
    const double plus = ok ? row["lambda_plus"].get<double>() : std::nan("");
    pass = pass && ok && plus > 0.0;
    if (ok) min_plus = std::min(min_plus, plus);
    detail += (detail.empty() ? "" : ", ") + name + (row["error"].get<double>() > 0 ? "+" : "-") +
              ":" + fixed(plus, 3);
  }
  report("5", "mismatch robustness at beta=0.1 eta=0.4", pass,
         std::string("matched filter bit-identical: ") +
             (value["matched_identical"].get<bool>() ? "yes" : "no") + "; truth lambda_plus " +
             fixed(value["truth_lambda_plus"].get<double>(), 3) + "; filter lambda_plus " + detail +
             "; min " + fixed(min_plus, 3));
}

void criterion_6() {
  const double rk4 = checks::integrator_vs_rk4(30);
  const double damping = checks::amplitude_damping_error();
  const checks::StepInvariants inv = checks::step_invariants(3000);
  const checks::RecordStats rec = checks::held_vacuum_record(100000);
  const bool a = rk4 <= 1e-4;
  const bool b = damping <= 1e-4;
  const bool c = inv.max_purity_step <= 1e-10;
  const bool d = inv.max_trace_error <= 1e-13 && inv.max_hermiticity_error == 0.0;
  const bool e = rec.mean_sigmas <= 3.0 && rec.variance_sigmas <= 3.0;
  report("6", "integrator correctness", a && b && c && d && e,
         "(a) vs RK4 " + sci(rk4) + " (<= 1e-4); (b) damping " + sci(damping) +
             " (<= 1e-4); (c) purity step " + sci(inv.max_purity_step) +
             " (<= 1e-10); (d) trace " + sci(inv.max_trace_error) + ", hermiticity " +
             sci(inv.max_hermiticity_error) + "; (e) record mean " + fixed(rec.mean_sigmas, 2) +
             " sigma, variance " + fixed(rec.variance_sigmas, 2) + " sigma (<= 3)");
}

void criterion_7(Runner& runner) {
  const checks::RecenterErrors r = checks::recenter_errors(120);
  const double distance = checks::moving_vs_fixed_distance(runner.tables());
  const bool pass = r.purity <= 1e-10 && r.moments <= 1e-6 && distance <= 1e-3;
  report("7", "moving basis", pass,
         "recenter purity change " + sci(r.purity) + " (<= 1e-10), moment change " +
             sci(r.moments) + " (<= 1e-6); dim 150 moving vs dim 400 fixed " + sci(distance) +
             " (<= 1e-3)");
}

void criterion_8() {
  double oracle = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    oracle = std::max(oracle, checks::gram_schmidt_vs_oracle(500, seed));
  }
  const double diagonal = checks::constant_diagonal_error();
  const bool shared = checks::shared_finalize_identical();
  report("8", "Lyapunov machinery", oracle <= 1e-8 && diagonal <= 1e-12 && shared,
         "vs 50-digit QR " + sci(oracle) + " (<= 1e-8); constant diagonal " + sci(diagonal) +
             "; shared finalize identical: " + (shared ? "yes" : "no"));
}

void criterion_9(Runner& runner) {
  const double err = checks::correspondence_error(runner.tables());
  report("9", "quantum-classical Jacobian at beta=0.05", err <= 2e-3,
         "max entrywise difference " + sci(err) + " (<= 2e-3)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qduffing acceptance criteria"};
  std::string mode = "full";
  std::string cache_dir;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--mode", mode, "smoke or full")->check(CLI::IsMember({"smoke", "full"}));
  app.add_option("--cache", cache_dir, "directory for cached trajectory results");
  app.add_option("--workers", workers, "parallel trajectory runs");
  CLI11_PARSE(app, argc, argv);

  ResultCache cache(cache_dir);
  Runner runner(cache, workers);
  const bool full = mode == "full";
  std::cout << "qduffing acceptance (" << mode << ", core " << std::string(QDUFFING_CORE_DIGEST).substr(0, 12)
            << ")" << std::endl;

  auto guarded = [](const std::string& id, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report(id, "error", false, e.what());
    }
  };

  guarded("1", criterion_1);
  guarded("6", criterion_6);
  guarded("7", [&] { criterion_7(runner); });
  guarded("8", criterion_8);
  guarded("9", [&] { criterion_9(runner); });
  guarded("2-smoke", [&] { criterion_2_smoke(runner); });
  if (full) {
    std::vector<PointSummary> beta_sweep, eta_sweep;
    guarded("2", [&] { beta_sweep = criterion_2_full(runner); });
    guarded("3", [&] { eta_sweep = criterion_3(runner); });
    guarded("4", [&] { criterion_4(beta_sweep, eta_sweep); });
    guarded("5", [&] { criterion_5(runner); });
  } else {
    skip("2", "beta transition, 100 cycles", "full mode only");
    skip("3", "efficiency insensitivity", "full mode only");
    skip("4", "purity asymptotics", "full mode only");
    skip("5", "mismatch robustness", "full mode only");
  }
  std::cout << (failures ? "FAILED: " + std::to_string(failures) + " criteria" : "all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
