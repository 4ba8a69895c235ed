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

#include "qduffing/band_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qduffing/errors.hpp"

namespace qduffing {

BandMatrix::BandMatrix(int dim, int lower, int upper)
    : dim_(dim), lower_(lower), upper_(upper) {
  if (dim < 1) throw Error(ErrorKind::kInvalidDimension, "band matrix needs dim >= 1");
  lower_ = std::clamp(lower, 0, dim - 1);
  upper_ = std::clamp(upper, 0, dim - 1);
  diags_.assign(lower_ + upper_ + 1, Eigen::VectorXcd::Zero(dim));
}

BandMatrix BandMatrix::identity(int dim) {
  BandMatrix m(dim, 0, 0);
  m.diagonal(0).setOnes();
  return m;
}

BandMatrix BandMatrix::from_dense(const Eigen::MatrixXcd& dense, double drop_below) {
  if (dense.rows() != dense.cols()) {
    throw Error(ErrorKind::kInvalidDimension, "band matrix must be square");
  }
  const int dim = static_cast<int>(dense.rows());
  int lower = 0;
  int upper = 0;
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) {
      if (std::abs(dense(i, j)) > drop_below) {
        lower = std::max(lower, i - j);
        upper = std::max(upper, j - i);
      }
    }
  }
  BandMatrix m(dim, lower, upper);
  for (int k = -m.lower_; k <= m.upper_; ++k) {
    for (int i = m.row_begin(k); i < m.row_end(k); ++i) m.diagonal(k)(i) = dense(i, i + k);
  }
  return m;
}

Complex BandMatrix::operator()(int row, int col) const {
  const int k = col - row;
  if (k < -lower_ || k > upper_) return 0.0;
  return diags_[k + lower_](row);
}

Complex& BandMatrix::at(int row, int col) {
  const int k = col - row;
  if (k < -lower_ || k > upper_ || row < 0 || row >= dim_ || col < 0 || col >= dim_) {
    throw Error(ErrorKind::kInvalidArgument, "band matrix index outside band");
  }
  return diags_[k + lower_](row);
}

BandMatrix BandMatrix::adjoint() const {
  BandMatrix out(dim_, upper_, lower_);
  for (int k = -lower_; k <= upper_; ++k) {
    // (i, i+k) -> (i+k, i), which sits on diagonal -k at row i+k.
    const int rb = row_begin(k);
    const int len = row_end(k) - rb;
    out.diagonal(-k).segment(rb + k, len) = diagonal(k).segment(rb, len).conjugate();
  }
  return out;
}

Eigen::MatrixXcd BandMatrix::dense() const {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_, dim_);
  for (int k = -lower_; k <= upper_; ++k) {
    for (int i = row_begin(k); i < row_end(k); ++i) out(i, i + k) = diagonal(k)(i);
  }
  return out;
}

BandMatrix BandMatrix::widened(int lower, int upper) const {
  BandMatrix out(dim_, std::max(lower, lower_), std::max(upper, upper_));
  for (int k = -lower_; k <= upper_; ++k) out.diagonal(k) = diagonal(k);
  return out;
}

BandMatrix& BandMatrix::add_scaled(const BandMatrix& other, Complex scale) {
  if (other.dim_ != dim_) {
    throw Error(ErrorKind::kDimensionMismatch, "band matrix dimensions differ");
  }
  if (other.lower_ > lower_ || other.upper_ > upper_) {
    *this = widened(other.lower_, other.upper_);
  }
  for (int k = -other.lower_; k <= other.upper_; ++k) {
    diagonal(k) += scale * other.diagonal(k);
  }
  return *this;
}

BandMatrix& BandMatrix::operator*=(Complex scale) {
  for (auto& d : diags_) d *= scale;
  return *this;
}

BandMatrix& BandMatrix::add_identity(Complex scale) {
  diagonal(0).array() += scale;
  return *this;
}

BandMatrix operator*(const BandMatrix& lhs, const BandMatrix& rhs) {
  if (lhs.dim_ != rhs.dim_) {
    throw Error(ErrorKind::kDimensionMismatch, "band matrix dimensions differ");
  }
  const int dim = lhs.dim_;
  BandMatrix out(dim, lhs.lower_ + rhs.lower_, lhs.upper_ + rhs.upper_);
  for (int ka = -lhs.lower_; ka <= lhs.upper_; ++ka) {
    const int rb = lhs.row_begin(ka);
    const int len = lhs.row_end(ka) - rb;
    if (len <= 0) continue;
    for (int kb = -rhs.lower_; kb <= rhs.upper_; ++kb) {
      const int kc = ka + kb;
      if (kc < -out.lower_ || kc > out.upper_) continue;
      // Slots where (i + ka) + kb leaves the matrix hold zeros in rhs.
      out.diagonal(kc).segment(rb, len) +=
          lhs.diagonal(ka).segment(rb, len).cwiseProduct(rhs.diagonal(kb).segment(rb + ka, len));
    }
  }
  return out;
}

Complex BandMatrix::trace_product(const Eigen::MatrixXcd& rho) const {
  // Tr[B rho] = sum_i sum_k B(i, i+k) rho(i+k, i).
  Complex sum = 0.0;
  for (int k = -lower_; k <= upper_; ++k) {
    const int rb = row_begin(k);
    const int len = row_end(k) - rb;
    if (len <= 0) continue;
    sum += diagonal(k).segment(rb, len).cwiseProduct(rho.diagonal(-k)).sum();
  }
  return sum;
}

void multiply(const BandMatrix& band, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) {
  const int dim = band.dim();
  const Eigen::Index cols = x.cols();
  out.setZero(dim, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    auto out_col = out.col(j);
    auto x_col = x.col(j);
    for (int k = -band.lower(); k <= band.upper(); ++k) {
      const int rb = band.row_begin(k);
      const int len = band.row_end(k) - rb;
      if (len <= 0) continue;
      out_col.segment(rb, len) +=
          band.diagonal(k).segment(rb, len).cwiseProduct(x_col.segment(rb + k, len));
    }
  }
}

void accumulate_upper_times_adjoint(const Eigen::MatrixXcd& y, const BandMatrix& band,
                                    double scale, Eigen::MatrixXcd& out) {
  // out(i, j) += scale * sum_k y(i, j+k) * conj(B(j, j+k)), for i <= j.
  const int dim = band.dim();
  for (int j = 0; j < dim; ++j) {
    auto out_head = out.col(j).head(j + 1);
    for (int k = -band.lower(); k <= band.upper(); ++k) {
      const int col = j + k;
      if (col < 0 || col >= dim) continue;
      const Complex c = scale * std::conj(band.diagonal(k)(j));
      if (c == Complex(0.0, 0.0)) continue;
      out_head += c * y.col(col).head(j + 1);
    }
  }
}

void accumulate_times_adjoint(const Eigen::MatrixXcd& z, const BandMatrix& band, Complex scale,
                              Eigen::MatrixXcd& out) {
  // out(:, j) += scale * sum_k z(:, j+k) * conj(B(j, j+k)).
  const int dim = band.dim();
  for (int j = 0; j < dim; ++j) {
    auto out_col = out.col(j);
    for (int k = -band.lower(); k <= band.upper(); ++k) {
      const int col = j + k;
      if (col < 0 || col >= dim) continue;
      const Complex c = scale * std::conj(band.diagonal(k)(j));
      if (c == Complex(0.0, 0.0)) continue;
      out_col += c * z.col(col);
    }
  }
}

void BandLU::factor(const BandMatrix& matrix) {
  lu_ = matrix;
  const int dim = lu_.dim();
  const int kl = lu_.lower();
  const int ku = lu_.upper();
  for (int k = 0; k < dim; ++k) {
    const Complex pivot = lu_(k, k);
    if (!(std::abs(pivot) > 1e-300) || !std::isfinite(std::abs(pivot))) {
      throw Error(ErrorKind::kSingularStep, "zero pivot in banded LU at row " + std::to_string(k));
    }
    for (int i = k + 1; i <= std::min(dim - 1, k + kl); ++i) {
      const Complex f = lu_(i, k) / pivot;
      lu_.at(i, k) = f;
      for (int j = k + 1; j <= std::min(dim - 1, k + ku); ++j) lu_.at(i, j) -= f * lu_(k, j);
    }
  }
}

void BandLU::solve_right_in_place(Eigen::MatrixXcd& w) const {
  // X L U = W: first S U = W (columns ascending), then X L = S (descending).
  const int dim = lu_.dim();
  for (int j = 0; j < dim; ++j) {
    auto col = w.col(j);
    for (int i = std::max(0, j - lu_.upper()); i < j; ++i) col -= lu_(i, j) * w.col(i);
    col /= lu_(j, j);
  }
  for (int j = dim - 1; j >= 0; --j) {
    auto col = w.col(j);
    for (int i = j + 1; i <= std::min(dim - 1, j + lu_.lower()); ++i) {
      col -= lu_(i, j) * w.col(i);
    }
  }
}

void BandLU::solve_in_place(Eigen::VectorXcd& x) const {
  const int dim = lu_.dim();
  for (int i = 0; i < dim; ++i) {
    for (int j = std::max(0, i - lu_.lower()); j < i; ++j) x(i) -= lu_(i, j) * x(j);
  }
  for (int i = dim - 1; i >= 0; --i) {
    for (int j = i + 1; j <= std::min(dim - 1, i + lu_.upper()); ++j) x(i) -= lu_(i, j) * x(j);
    x(i) /= lu_(i, i);
  }
}

void fill_lower_from_upper(Eigen::MatrixXcd& m) {
  const Eigen::Index dim = m.rows();
  for (Eigen::Index j = 0; j < dim; ++j) {
    m(j, j) = Complex(m(j, j).real(), 0.0);
    for (Eigen::Index i = j + 1; i < dim; ++i) m(i, j) = std::conj(m(j, i));
  }
}

}  // namespace qduffing
