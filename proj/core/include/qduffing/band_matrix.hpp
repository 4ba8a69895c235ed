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
#include <vector>

#include <Eigen/Dense>

namespace qduffing {

using Complex = std::complex<double>;

/// Square complex matrix stored by diagonals. Every operator in the
/// Hamiltonian and the Lindblad operator is a short polynomial in a and a^dag,
/// so their truncated matrices are banded; keeping them in this form turns
/// the per-step sandwich products into O(dim^2 * bandwidth) work.
///
/// Diagonal k (k in [-lower, upper]) holds entry (i, i + k) at index i.
/// Slots that would fall outside the matrix are kept at zero.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(int dim, int lower, int upper);

  static BandMatrix identity(int dim);
  static BandMatrix from_dense(const Eigen::MatrixXcd& dense, double drop_below = 0.0);

  int dim() const { return dim_; }
  int lower() const { return lower_; }
  int upper() const { return upper_; }

  /// Returns zero outside the band.
  Complex operator()(int row, int col) const;
  /// (row, col) must lie inside the band.
  Complex& at(int row, int col);

  /// Coefficient vector of diagonal k; entry i is (i, i + k).
  const Eigen::VectorXcd& diagonal(int k) const { return diags_[k + lower_]; }
  Eigen::VectorXcd& diagonal(int k) { return diags_[k + lower_]; }

  /// Row range [begin, end) for which diagonal k is inside the matrix.
  int row_begin(int k) const { return k < 0 ? -k : 0; }
  int row_end(int k) const { return k > 0 ? dim_ - k : dim_; }

  BandMatrix adjoint() const;
  Eigen::MatrixXcd dense() const;

  /// Widens the stored band without changing the matrix.
  BandMatrix widened(int lower, int upper) const;

  /// this += scale * other; the band grows as needed.
  BandMatrix& add_scaled(const BandMatrix& other, Complex scale);
  BandMatrix& operator+=(const BandMatrix& other) { return add_scaled(other, 1.0); }
  BandMatrix& operator-=(const BandMatrix& other) { return add_scaled(other, -1.0); }
  BandMatrix& operator*=(Complex scale);
  /// this += scale * identity.
  BandMatrix& add_identity(Complex scale);

  friend BandMatrix operator*(const BandMatrix& lhs, const BandMatrix& rhs);
  friend BandMatrix operator*(Complex scale, BandMatrix m) { return m *= scale; }
  friend BandMatrix operator+(BandMatrix lhs, const BandMatrix& rhs) { return lhs += rhs; }
  friend BandMatrix operator-(BandMatrix lhs, const BandMatrix& rhs) { return lhs -= rhs; }

  /// Tr[this * rho] in O(dim * bandwidth).
  Complex trace_product(const Eigen::MatrixXcd& rho) const;

 private:
  int dim_ = 0;
  int lower_ = 0;
  int upper_ = 0;
  std::vector<Eigen::VectorXcd> diags_;
};

/// out = band * x (dense x, dense out). out must not alias x.
void multiply(const BandMatrix& band, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out);

/// Upper triangle (diagonal included) of out += scale * y * band^dag.
/// The strictly lower triangle of out is left untouched.
void accumulate_upper_times_adjoint(const Eigen::MatrixXcd& y, const BandMatrix& band,
                                    double scale, Eigen::MatrixXcd& out);

/// out += scale * z * band^dag over full columns.
void accumulate_times_adjoint(const Eigen::MatrixXcd& z, const BandMatrix& band, Complex scale,
                              Eigen::MatrixXcd& out);

/// LU factors of a banded matrix without pivoting. Meant for matrices whose
/// Hermitian part is positive definite (I + dt (iH + G) with G >= 0), for
/// which elimination without pivoting is well defined and stable.
class BandLU {
 public:
  BandLU() = default;
  explicit BandLU(const BandMatrix& matrix) { factor(matrix); }

  void factor(const BandMatrix& matrix);
  int dim() const { return lu_.dim(); }

  /// w <- w * A^-1, column by column.
  void solve_right_in_place(Eigen::MatrixXcd& w) const;
  /// x <- A^-1 x for a single vector.
  void solve_in_place(Eigen::VectorXcd& x) const;

 private:
  BandMatrix lu_;  // unit lower factor below the diagonal, upper factor on and above
};

/// Copies the conjugate of the strict upper triangle into the strict lower
/// triangle and drops the imaginary part of the diagonal.
void fill_lower_from_upper(Eigen::MatrixXcd& m);

}  // namespace qduffing
