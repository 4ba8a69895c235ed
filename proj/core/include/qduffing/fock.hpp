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

#include <complex>
#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Dense>

#include "qduffing/band_matrix.hpp"

namespace qduffing {

/// Dense operator on the truncated number-state basis.
using OperatorMatrix = Eigen::MatrixXcd;

/// Conditioned state of the oscillator in the (possibly displaced) Fock basis.
///
/// The checked constructor enforces Hermiticity and unit trace to 1e-10.
/// Positivity is a diagnostic (see `min_eigenvalue`) and is not enforced.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Eigen::MatrixXcd entries);

  /// Wraps entries without validation. Used by the integrators, which
  /// normalise and hermitise on every step.
  static DensityMatrix unchecked(Eigen::MatrixXcd entries);

  static DensityMatrix number_state(int dim, int n);
  static DensityMatrix maximally_mixed(int dim);
  /// D(alpha)|0><0|D(alpha)^dag built with the truncated displacement.
  static DensityMatrix coherent(int dim, Complex alpha);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return m_; }
  Eigen::MatrixXcd& mutable_matrix() { return m_; }

  Complex operator()(int row, int col) const { return m_(row, col); }

  double trace() const { return m_.trace().real(); }
  /// max |rho - rho^dag| entrywise.
  double hermiticity_error() const;
  double min_eigenvalue() const;

 private:
  Eigen::MatrixXcd m_;
};

/// a with a(n-1, n) = sqrt(n).
OperatorMatrix build_annihilation(int dim);

/// Immutable cache of every operator the Hamiltonian and Lindblad operator
/// need, in dense and banded form, plus the eigen-decomposition of the
/// truncated position operator used for fast displacements.
struct OperatorTable {
  explicit OperatorTable(int dim);

  int dim;
  OperatorMatrix a, adag, q, q2, q3, q4, p, p2, qp_pq, identity;

  struct Banded {
    BandMatrix a, adag, q, q2, q3, q4, p, p2, qp_pq, identity;
  } band;

  /// q = V diag(x) V^T (real symmetric tridiagonal).
  Eigen::VectorXd position_nodes;
  Eigen::MatrixXd position_vectors;
};

OperatorTable build_operator_table(int dim);

/// Thread-safe, lazily filled set of operator tables keyed by dimension.
/// Tables are never evicted, so returned pointers stay valid.
class OperatorTableCache {
 public:
  std::shared_ptr<const OperatorTable> get(int dim);

 private:
  std::mutex mutex_;
  std::map<int, std::shared_ptr<const OperatorTable>> tables_;
};

/// exp(alpha a^dag - alpha^* a) on the truncated space (scaling and squaring).
OperatorMatrix displacement(Complex alpha, int dim);

/// D(alpha) rho D(alpha)^dag using the spectral form of the truncated
/// displacement, D = R V diag(exp(i sqrt2 |alpha| x)) V^T R^dag with R a
/// diagonal phase. Identical to conjugating by `displacement(alpha, dim)`
/// up to rounding, but built from real GEMMs against a cached eigenbasis.
Eigen::MatrixXcd displace(const Eigen::MatrixXcd& rho, Complex alpha,
                          const OperatorTable& table);

/// Tr[op rho].
Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho);
Complex expectation(const BandMatrix& op, const DensityMatrix& rho);

/// Tr[rho^2].
double purity(const DensityMatrix& rho);

/// (1/2) sum |eig(rho1 - rho2)|.
double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// (m + m^dag) / 2.
Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m);

}  // namespace qduffing
