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

#include <cmath>
#include <algorithm>
#include <numbers>
#include <string>

#include "qduffing/errors.hpp"

namespace qduffing {
namespace {

constexpr double kSingularTrace = 1e-14;

void check_step_arguments(const DensityMatrix& rho, double dt, double noise,
                          const OperatorTable& table) {
  if (rho.dim() != table.dim) {
    throw Error(ErrorKind::kDimensionMismatch, "state and operator table dimensions differ");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::kInvalidArgument, "time step must be finite and > 0");
  }
  if (!std::isfinite(noise)) {
    throw Error(ErrorKind::kInvalidArgument, "noise / record increment must be finite");
  }
}

}  // namespace

const char* to_string(StepScheme scheme) {
  return scheme == StepScheme::kExplicit ? "explicit" : "cayley";
}

StepScheme step_scheme_from_string(const std::string& name) {
  if (name == "explicit") return StepScheme::kExplicit;
  if (name == "cayley") return StepScheme::kCayley;
  throw ConfigError("scheme", "unknown step scheme '" + name + "' (explicit, cayley)");
}

BandMatrix rouchon_kraus(const BandMatrix& h, const BandMatrix& l, double dt, double dW,
                         double dy, double eta) {
  const Complex i(0.0, 1.0);
  BandMatrix m = (-i * dt) * h;
  m.add_scaled(l.adjoint() * l, -0.5 * dt);
  m.add_identity(1.0);
  if (eta > 0.0) {
    m.add_scaled(l * l, 0.5 * eta * (dW * dW - dt));
    m.add_scaled(l, std::sqrt(eta) * dy);
  }
  return m;
}

double SmeIntegrator::record_drift(const DensityMatrix& rho, const BandMatrix& lindblad,
                                   const ModelParams& params) {
  return std::sqrt(params.eta) * 2.0 * lindblad.trace_product(rho.matrix()).real();
}

double SmeIntegrator::hamiltonian_time(double t, double dt) const {
  // The Cayley propagator is the implicit midpoint rule for the unitary part.
  return scheme_ == StepScheme::kCayley ? t + 0.5 * dt : t;
}

double SmeIntegrator::advance(DensityMatrix& rho, double t, double dt, double dW,
                              const FrameOffset& frame, const ModelParams& params,
                              const OperatorTable& table) {
  check_step_arguments(rho, dt, dW, table);
  const BandMatrix l = lindblad_band(frame, params, table);
  const double drift = record_drift(rho, l, params);
  const double dy = drift * dt + dW;
  // Recover the innovation from dy exactly as a filter would, so that the
  // truth and a matched filter perform identical arithmetic.
  const double innovation = dy - drift * dt;
  apply(rho, hamiltonian_band(hamiltonian_time(t, dt), frame, params, table), l, dt, innovation, dy, params);
  return dy;
}

double SmeIntegrator::advance_with_record(DensityMatrix& rho, double t, double dt, double dy,
                                          const FrameOffset& frame, const ModelParams& params,
                                          const OperatorTable& table) {
  check_step_arguments(rho, dt, dy, table);
  const BandMatrix l = lindblad_band(frame, params, table);
  const double drift = record_drift(rho, l, params);
  const double innovation = dy - drift * dt;
  apply(rho, hamiltonian_band(hamiltonian_time(t, dt), frame, params, table), l, dt, innovation, dy, params);
  return innovation;
}

void SmeIntegrator::apply(DensityMatrix& rho, const BandMatrix& h, const BandMatrix& l,
                          double dt, double dW, double dy, const ModelParams& params) {
  const int dim = rho.dim();
  y_.resize(dim, dim);
  w_.resize(dim, dim);
  n_.resize(dim, dim);
  v_.resize(dim, dim);
  if (scheme_ == StepScheme::kExplicit) {
    apply_explicit(rho.matrix(), h, l, dt, dW, dy, params);
  } else {
    apply_cayley(rho.matrix(), h, l, dt, dW, dy, params);
  }

  double trace = 0.0;
  for (int k = 0; k < dim; ++k) trace += n_(k, k).real();
  if (!std::isfinite(trace)) {
    throw Error(ErrorKind::kNumericalOverflow, "non-finite trace in Rouchon step");
  }
  if (trace <= kSingularTrace) {
    throw Error(ErrorKind::kSingularStep,
                "Rouchon step trace " + std::to_string(trace) +
                    " is singular; use a smaller time step or a larger basis");
  }
  n_ /= trace;
  fill_lower_from_upper(n_);
  if (!n_.allFinite()) {
    throw Error(ErrorKind::kNumericalOverflow, "non-finite entries after Rouchon step");
  }
  rho.mutable_matrix().swap(n_);
}

void SmeIntegrator::apply_explicit(const Eigen::MatrixXcd& r, const BandMatrix& h,
                                   const BandMatrix& l, double dt, double dW, double dy,
                                   const ModelParams& params) {
  const BandMatrix m = rouchon_kraus(h, l, dt, dW, dy, params.eta);
  n_.setZero();
  multiply(m, r, y_);
  accumulate_upper_times_adjoint(y_, m, 1.0, n_);
  const double unmonitored = (1.0 - params.eta) * dt;
  if (unmonitored > 0.0) {
    multiply(l, r, w_);
    accumulate_upper_times_adjoint(w_, l, unmonitored, n_);
  }
}

void SmeIntegrator::right_apply_kraus(const Eigen::MatrixXcd& z, Eigen::MatrixXcd& out) const {
  // M = (I + X)^-1 (I - X) D + F, so z M^dag = z [(I - X) D]^dag (I + X)^-dag + z F^dag.
  out.setZero();
  accumulate_times_adjoint(z, minus_, 1.0, out);
  plus_adjoint_.solve_right_in_place(out);
  if (feedback_.dim() == z.rows()) accumulate_times_adjoint(z, feedback_, 1.0, out);
}

void SmeIntegrator::dissipate_half(const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out) {
  out.setZero(in.rows(), in.cols());
  for (const BandMatrix& k : jump_kraus_) {
    multiply(k, in, y_);
    accumulate_upper_times_adjoint(y_, k, 1.0, out);
  }
  fill_lower_from_upper(out);
}

void SmeIntegrator::apply_cayley(const Eigen::MatrixXcd& r, const BandMatrix& h,
                                 const BandMatrix& l, double dt, double dW, double dy,
                                 const ModelParams& params) {
  const Complex i(0.0, 1.0);
  const double eta = params.eta;
  const BandMatrix g = l.adjoint() * l;

  // Monitored part: M = (I + X)^-1 (I - X) D + F with X = iH dt/2,
  // D = I - eta L^dag L dt/2 and F the measurement terms.
  const BandMatrix x = (i * 0.5 * dt) * h;
  BandMatrix minus = (-1.0) * x;
  minus.add_identity(1.0);
  BandMatrix damping = (-0.5 * eta * dt) * g;
  damping.add_identity(1.0);
  minus_ = minus * damping;
  BandMatrix plus_adjoint = x.adjoint();
  plus_adjoint.add_identity(1.0);
  plus_adjoint_.factor(plus_adjoint);
  if (eta > 0.0) {
    feedback_ = (0.5 * eta * (dW * dW - dt)) * (l * l);
    feedback_.add_scaled(l, std::sqrt(eta) * dy);
  } else {
    feedback_ = BandMatrix();
  }

  // Unmonitored part: half a step of the (1 - eta) dissipator on each side,
  // each a second-order Kraus map K0 = I - s G/2 + s^2 G^2/8,
  // K1 = sqrt(s) (L - s (G L + L G)/4), K2 = s L^2 / sqrt(2), s = (1 - eta) dt/2.
  const double s = 0.5 * (1.0 - eta) * dt;
  const Eigen::MatrixXcd* source = &r;
  if (s > 0.0) {
    BandMatrix k0 = (-0.5 * s) * g;
    k0.add_scaled(g * g, 0.125 * s * s);
    k0.add_identity(1.0);
    BandMatrix k1 = l;
    k1.add_scaled(g * l + l * g, -0.25 * s);
    k1 *= std::sqrt(s);
    jump_kraus_ = {std::move(k0), std::move(k1), (s / std::numbers::sqrt2) * (l * l)};
    dissipate_half(r, v_);
    source = &v_;
  }

  right_apply_kraus(*source, w_);  // rho M^dag
  y_ = w_.adjoint();               // M rho
  right_apply_kraus(y_, n_);       // M rho M^dag
  y_ = n_.adjoint();
  n_ += y_;
  n_ *= 0.5;
  if (s > 0.0) {
    dissipate_half(n_, v_);
    n_.swap(v_);
  }
}

StepOutput rouchon_step(const StepInput& in, const OperatorTable& table, StepScheme scheme) {
  SmeIntegrator integrator(scheme);
  StepOutput out{in.rho, 0.0};
  out.dy = integrator.advance(out.rho_next, in.t, in.dt, in.dW, in.frame, in.params, table);
  return out;
}

DensityMatrix deterministic_step(const DensityMatrix& rho, double t, double dt,
                                 const FrameOffset& frame, const ModelParams& params,
                                 const OperatorTable& table, StepScheme scheme) {
  SmeIntegrator integrator(scheme);
  DensityMatrix next = rho;
  integrator.advance(next, t, dt, 0.0, frame, params, table);
  return next;
}

StepOutput filter_step(const DensityMatrix& rho_f, double dy, double t, double dt,
                       const FrameOffset& frame_f, const ModelParams& filter_params,
                       const OperatorTable& table, StepScheme scheme) {
  SmeIntegrator integrator(scheme);
  StepOutput out{rho_f, dy};
  integrator.advance_with_record(out.rho_next, t, dt, dy, frame_f, filter_params, table);
  return out;
}

DensityMatrix lindblad_rk4_step(const DensityMatrix& rho, double t, double dt,
                                const FrameOffset& frame, const ModelParams& params,
                                const OperatorTable& table) {
  check_step_arguments(rho, dt, 0.0, table);
  const BandMatrix l = lindblad_band(frame, params, table);
  const BandMatrix ldl = l.adjoint() * l;
  const Complex i(0.0, 1.0);

  Eigen::MatrixXcd hr, w, lrl, ldlr;
  auto rhs = [&](const Eigen::MatrixXcd& r, double time) {
    const BandMatrix h = hamiltonian_band(time, frame, params, table);
    multiply(h, r, hr);
    multiply(l, r, w);
    multiply(l, w.adjoint(), lrl);  // L (L rho)^dag = L rho L^dag
    multiply(ldl, r, ldlr);
    Eigen::MatrixXcd out = -i * (hr - hr.adjoint()) + lrl -
                           0.5 * (ldlr + ldlr.adjoint());
    return out;
  };

  const Eigen::MatrixXcd& r0 = rho.matrix();
  const Eigen::MatrixXcd k1 = rhs(r0, t);
  const Eigen::MatrixXcd k2 = rhs(r0 + 0.5 * dt * k1, t + 0.5 * dt);
  const Eigen::MatrixXcd k3 = rhs(r0 + 0.5 * dt * k2, t + 0.5 * dt);
  const Eigen::MatrixXcd k4 = rhs(r0 + dt * k3, t + dt);
  Eigen::MatrixXcd next = r0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw Error(ErrorKind::kNumericalOverflow, "non-finite entries in RK4 Lindblad step");
  }
  return DensityMatrix::unchecked(hermitize(next));
}

GaussianSource::GaussianSource(std::uint64_t seed) : engine_(seed) {}

double GaussianSource::next(double variance) { return std::sqrt(variance) * normal_(engine_); }

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
  // splitmix64 finaliser over a golden-ratio stride
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

InitialState default_initial_state(const ModelParams& params, int dim) {
  return {DensityMatrix::number_state(dim, 0), FrameOffset{1.0 / params.beta, 0.0}};
}

std::array<double, 2> local_means(const DensityMatrix& rho, const OperatorTable& table) {
  const Complex a = table.band.a.trace_product(rho.matrix());
  return {std::numbers::sqrt2 * a.real(), std::numbers::sqrt2 * a.imag()};
}

int working_block_size(const DensityMatrix& rho, const BasisPolicy& policy, int dim) {
  int last = 0;
  for (int n = rho.dim() - 1; n > 0; --n) {
    if (rho(n, n).real() > policy.population_cutoff) {
      last = n;
      break;
    }
  }
  const int g = std::max(1, policy.granularity);
  const int need = last + 1 + policy.margin;
  const int rounded = (need + g - 1) / g * g;
  return std::clamp(rounded, std::min(policy.min_dim, dim), dim);
}

DensityMatrix resize_state(const DensityMatrix& rho, int dim) {
  if (dim < 2) throw Error(ErrorKind::kInvalidDimension, "state dimension must be >= 2");
  if (dim == rho.dim()) return rho;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  const int keep = std::min(dim, rho.dim());
  m.topLeftCorner(keep, keep) = rho.matrix().topLeftCorner(keep, keep);
  const double trace = m.trace().real();
  if (!(trace > 0.0)) {
    throw Error(ErrorKind::kBasisTooSmall, "truncation removed the whole state");
  }
  m /= trace;
  return DensityMatrix::unchecked(std::move(m));
}

TrajectoryRunner::TrajectoryRunner(const InitialState& initial, const ModelParams& params,
                                   const Schedule& schedule, OperatorTableCache& tables,
                                   std::uint64_t seed_label)
    : params_(params),
      schedule_(schedule),
      tables_(&tables),
      max_dim_(schedule.dim > 0 ? schedule.dim : initial.rho.dim()),
      integrator_(schedule.scheme),
      rho_(initial.rho),
      frame_(initial.frame) {
  params_.validate();
  schedule_.recenter.validate();
  if (!(schedule_.dt > 0.0)) throw Error(ErrorKind::kInvalidArgument, "dt must be > 0");
  if (schedule_.n_steps < 0) throw Error(ErrorKind::kInvalidArgument, "n_steps must be >= 0");
  if (schedule_.output_stride < 1) {
    throw Error(ErrorKind::kInvalidArgument, "output_stride must be >= 1");
  }
  if (max_dim_ < 2) throw Error(ErrorKind::kInvalidDimension, "dim must be >= 2");
  if (rho_.dim() > max_dim_) {
    throw Error(ErrorKind::kDimensionMismatch, "initial state is larger than the basis");
  }
  if (schedule_.recenter.tail_levels >= max_dim_) {
    throw Error(ErrorKind::kInvalidArgument, "tail_levels must be smaller than dim");
  }
  const BasisPolicy& basis = schedule_.basis;
  if (basis.adaptive && (basis.margin < 0 || basis.granularity < 1 || basis.min_dim < 2 ||
                         !(basis.population_cutoff >= 0.0))) {
    throw Error(ErrorKind::kInvalidArgument, "invalid working-block policy");
  }
  if (basis.adaptive) {
    resize_block(working_block_size(rho_, basis, max_dim_));
  } else {
    resize_block(max_dim_);
  }
  record_.seed = seed_label;
  sample();
}

void TrajectoryRunner::resize_block(int dim) {
  if (dim != rho_.dim()) rho_ = resize_state(rho_, dim);
  if (!table_ || table_->dim != dim) table_ = tables_->get(dim);
}

void TrajectoryRunner::fit_block() {
  if (!schedule_.basis.adaptive) return;
  const int target = working_block_size(rho_, schedule_.basis, max_dim_);
  const int current = rho_.dim();
  // Shrink lazily so a state sitting on a bucket edge does not thrash.
  if (target > current || target + schedule_.basis.granularity < current) resize_block(target);
}

void TrajectoryRunner::notify() {
  if (!observer_) return;
  observer_(StepContext{step_, time(), schedule_.dt, rho_, frame_, params_, *table_});
}

double TrajectoryRunner::step(double dW) {
  notify();
  try {
    const double dy =
        integrator_.advance(rho_, time(), schedule_.dt, dW, frame_, params_, *table_);
    finish_step(dy);
    return dy;
  } catch (const Error& e) {
    throw Error(e.kind(), "step " + std::to_string(step_) + ": " + e.what());
  }
}

void TrajectoryRunner::step_with_record(double dy) {
  notify();
  try {
    integrator_.advance_with_record(rho_, time(), schedule_.dt, dy, frame_, params_, *table_);
    finish_step(dy);
  } catch (const Error& e) {
    throw Error(e.kind(), "step " + std::to_string(step_) + ": " + e.what());
  }
}

void TrajectoryRunner::finish_step(double dy) {
  ++step_;
  dy_since_sample_ += dy;
  if (schedule_.keep_full_record) record_.full_dy.push_back(dy);

  // Population in the top tail_levels of the full basis; zero while the
  // working block stays below them.
  const RecenterPolicy& policy = schedule_.recenter;
  double tail = 0.0;
  for (int n = std::max(0, max_dim_ - policy.tail_levels); n < rho_.dim(); ++n) {
    tail += rho_(n, n).real();
  }
  record_.max_tail_population = std::max(record_.max_tail_population, tail);
  if (tail > policy.tail_tolerance) {
    ++record_.tail_warnings;
    if (tail > 100.0 * policy.tail_tolerance) {
      throw Error(ErrorKind::kBasisTooSmall,
                  "population " + std::to_string(tail) + " in the top " +
                      std::to_string(policy.tail_levels) + " of " + std::to_string(max_dim_) +
                      " Fock levels; increase dim or reduce dt");
    }
  }

  fit_block();
  if (recenter_in_place(rho_, frame_, policy, *table_)) {
    ++record_.recenter_count;
    fit_block();
  }

  if (schedule_.positivity_stride > 0 && step_ % schedule_.positivity_stride == 0) {
    record_.min_eigenvalue = std::min(record_.min_eigenvalue, rho_.min_eigenvalue());
  }
  if (step_ % schedule_.output_stride == 0) sample();
}

void TrajectoryRunner::sample() {
  const auto means = local_means(rho_, *table_);
  record_.times.push_back(time());
  record_.dy.push_back(dy_since_sample_);
  record_.mean_q.push_back(means[0] + frame_.q0);
  record_.mean_p.push_back(means[1] + frame_.p0);
  record_.purity.push_back(purity(rho_));
  record_.q0.push_back(frame_.q0);
  record_.p0.push_back(frame_.p0);
  record_.dim_used.push_back(rho_.dim());
  dy_since_sample_ = 0.0;
}

TrajectoryRecord simulate_trajectory(const InitialState& initial, const ModelParams& params,
                                     const Schedule& schedule, std::uint64_t seed,
                                     OperatorTableCache& tables, const StepObserver& observer) {
  TrajectoryRunner runner(initial, params, schedule, tables, seed);
  if (observer) runner.set_observer(observer);
  GaussianSource noise(seed);
  for (long n = 0; n < schedule.n_steps; ++n) runner.step(noise.next(schedule.dt));
  return runner.take_record();
}

}  // namespace qduffing
