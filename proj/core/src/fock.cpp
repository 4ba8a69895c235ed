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

#include "qduffing/fock.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "qduffing/errors.hpp"

namespace qduffing {
namespace {

constexpr double kStateTolerance = 1e-10;

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(what) + ": dimensions " + std::to_string(a) + " and " +
                    std::to_string(b) + " differ");
  }
}

}  // namespace

DensityMatrix::DensityMatrix(Eigen::MatrixXcd entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || m_.rows() < 2) {
    throw Error(ErrorKind::kInvalidDimension, "density matrix must be square with dim >= 2");
  }
  if (!m_.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "density matrix has non-finite entries");
  }
  if (hermiticity_error() > kStateTolerance) {
    throw Error(ErrorKind::kInvalidArgument, "density matrix is not Hermitian");
  }
  if (std::abs(m_.trace() - Complex(1.0, 0.0)) > kStateTolerance) {
    throw Error(ErrorKind::kInvalidArgument, "density matrix trace is not 1");
  }
}

DensityMatrix DensityMatrix::unchecked(Eigen::MatrixXcd entries) {
  DensityMatrix rho;
  rho.m_ = std::move(entries);
  return rho;
}

DensityMatrix DensityMatrix::number_state(int dim, int n) {
  if (dim < 2) throw Error(ErrorKind::kInvalidDimension, "dim must be >= 2");
  if (n < 0 || n >= dim) throw Error(ErrorKind::kInvalidArgument, "number state outside basis");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  m(n, n) = 1.0;
  return unchecked(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 2) throw Error(ErrorKind::kInvalidDimension, "dim must be >= 2");
  return unchecked(Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::coherent(int dim, Complex alpha) {
  const Eigen::VectorXcd psi = displacement(alpha, dim).col(0);
  Eigen::MatrixXcd m = psi * psi.adjoint();
  m /= m.trace().real();
  return unchecked(hermitize(m));
}

double DensityMatrix::hermiticity_error() const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitize(m_), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

OperatorMatrix build_annihilation(int dim) {
  if (dim < 2) {
    throw Error(ErrorKind::kInvalidDimension,
                "basis size must be at least 2, got " + std::to_string(dim));
  }
  OperatorMatrix a = OperatorMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

OperatorTable::OperatorTable(int dim_in) : dim(dim_in) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const Complex i(0.0, 1.0);
  a = build_annihilation(dim);
  adag = a.adjoint();
  q = (a + adag) * inv_sqrt2;
  p = -i * (a - adag) * inv_sqrt2;
  q2 = q * q;
  q3 = q2 * q;
  q4 = q3 * q;
  p2 = p * p;
  qp_pq = q * p + p * q;
  identity = OperatorMatrix::Identity(dim, dim);

  // Products of banded matrices leave exact zeros outside the band, so the
  // banded copies hold bit-identical entries.
  band.a = BandMatrix::from_dense(a);
  band.adag = BandMatrix::from_dense(adag);
  band.q = BandMatrix::from_dense(q);
  band.q2 = BandMatrix::from_dense(q2);
  band.q3 = BandMatrix::from_dense(q3);
  band.q4 = BandMatrix::from_dense(q4);
  band.p = BandMatrix::from_dense(p);
  band.p2 = BandMatrix::from_dense(p2);
  band.qp_pq = BandMatrix::from_dense(qp_pq);
  band.identity = BandMatrix::identity(dim);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q.real());
  position_nodes = solver.eigenvalues();
  position_vectors = solver.eigenvectors();
}

OperatorTable build_operator_table(int dim) { return OperatorTable(dim); }

OperatorMatrix displacement(Complex alpha, int dim) {
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
    throw Error(ErrorKind::kInvalidArgument, "displacement amplitude must be finite");
  }
  const OperatorMatrix a = build_annihilation(dim);
  const OperatorMatrix generator = alpha * a.adjoint() - std::conj(alpha) * a;
  return generator.exp();
}

std::shared_ptr<const OperatorTable> OperatorTableCache::get(int dim) {
  const std::lock_guard lock(mutex_);
  auto& slot = tables_[dim];
  if (!slot) slot = std::make_shared<const OperatorTable>(dim);
  return slot;
}

Eigen::MatrixXcd displace(const Eigen::MatrixXcd& rho, Complex alpha, const OperatorTable& table) {
  require_same_dim(rho.rows(), table.dim, "displace");
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
    throw Error(ErrorKind::kInvalidArgument, "displacement amplitude must be finite");
  }
  const int dim = table.dim;
  const double magnitude = std::abs(alpha);
  if (magnitude == 0.0) return rho;

  // D(alpha) = R V diag(exp(i sqrt2 |alpha| x_k)) V^T R^dag with
  // R = diag(exp(i n (arg(alpha) - pi/2))).
  const double phase = std::arg(alpha) - 0.5 * std::numbers::pi;
  Eigen::VectorXcd r(dim);
  for (int n = 0; n < dim; ++n) r(n) = std::polar(1.0, n * phase);

  // R^dag rho R
  Eigen::MatrixXcd work = r.conjugate().asDiagonal() * rho * r.asDiagonal();

  const Eigen::MatrixXd& v = table.position_vectors;
  Eigen::MatrixXd re = v.transpose() * work.real() * v;
  Eigen::MatrixXd im = v.transpose() * work.imag() * v;

  const double s = std::numbers::sqrt2 * magnitude;
  const Eigen::VectorXd& x = table.position_nodes;
  Eigen::VectorXcd e(dim);
  for (int k = 0; k < dim; ++k) e(k) = std::polar(1.0, s * x(k));
  for (int l = 0; l < dim; ++l) {
    const Complex el = std::conj(e(l));
    for (int k = 0; k < dim; ++k) {
      const Complex z = e(k) * el * Complex(re(k, l), im(k, l));
      re(k, l) = z.real();
      im(k, l) = z.imag();
    }
  }

  work.real() = v * re * v.transpose();
  work.imag() = v * im * v.transpose();
  return r.asDiagonal() * work * r.conjugate().asDiagonal();
}

Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho) {
  require_same_dim(op.rows(), rho.dim(), "expectation");
  return op.cwiseProduct(rho.matrix().transpose()).sum();
}

Complex expectation(const BandMatrix& op, const DensityMatrix& rho) {
  require_same_dim(op.dim(), rho.dim(), "expectation");
  return op.trace_product(rho.matrix());
}

double purity(const DensityMatrix& rho) { return rho.matrix().squaredNorm(); }

double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  require_same_dim(rho1.dim(), rho2.dim(), "trace_distance");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      hermitize(rho1.matrix() - rho2.matrix()), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace qduffing
