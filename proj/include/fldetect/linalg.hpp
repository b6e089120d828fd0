// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Dense vector and small-matrix kernels used by the compact L-BFGS
// representation. Parameter vectors are p-dimensional; matrices never grow
// beyond a few times the history window size.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fld {

/// Flat parameter / update vector. Entries are checked finite on construction.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<double> values);
  ParamVector(std::initializer_list<double> values);

  static ParamVector zeros(std::size_t dim);

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& raw() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }
  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }

  ParamVector& operator+=(const ParamVector& o);
  ParamVector& operator-=(const ParamVector& o);
  ParamVector& operator*=(double s);

  /// this += s * x
  ParamVector& axpy(double s, const ParamVector& x);

  bool all_finite() const noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a);
ParamVector operator*(double s, ParamVector a);

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
};

/// Throws DimensionError when the dimensions differ.
double dot(const ParamVector& a, const ParamVector& b);
double dot(std::span<const double> a, std::span<const double> b);
Norms norms(const ParamVector& a);
double l2_norm(const ParamVector& a);
double l2_distance(const ParamVector& a, const ParamVector& b);
double squared_distance(const ParamVector& a, const ParamVector& b);

/// Dense row-major matrix, sized for the window-level algebra (2N x 2N at most
/// in the detector, p x p only in test oracles).
class SmallMatrix {
 public:
  SmallMatrix() = default;
  SmallMatrix(std::size_t rows, std::size_t cols);
  SmallMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  SmallMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static SmallMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> entries() const noexcept { return data_; }

  SmallMatrix transposed() const;
  double frobenius() const;

  friend bool operator==(const SmallMatrix&, const SmallMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

SmallMatrix operator*(const SmallMatrix& a, const SmallMatrix& b);
SmallMatrix operator+(const SmallMatrix& a, const SmallMatrix& b);
SmallMatrix operator-(const SmallMatrix& a, const SmallMatrix& b);
std::vector<double> operator*(const SmallMatrix& a, std::span<const double> x);

inline constexpr double kPositiveDefiniteFloor = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-9;

/// Lower-triangular C with C * C^T == m. Inputs that are only approximately
/// symmetric (within kSymmetryTolerance relative) are symmetrized first; larger
/// asymmetry is an InvalidArgument. A pivot <= kPositiveDefiniteFloor raises
/// NotPositiveDefinite carrying the pivot index.
SmallMatrix cholesky(const SmallMatrix& m);

/// Solves t x = rhs (or t^T x = rhs when `transposed`) for triangular t.
std::vector<double> solve_triangular(const SmallMatrix& t, std::span<const double> rhs,
                                     bool lower, bool transposed);

/// Applies the inverse of the factored L-BFGS middle matrix:
///
///   q = M2^{-1} M1^{-1} [top; bot]
///   M1 = [[ D^{1/2},        0 ],      M2 = [[ -D^{1/2}, D^{-1/2} L^T ],
///         [ -L D^{-1/2},    J ]]            [  0,       J^T          ]]
///
/// so that M1 * M2 == [[-D, L^T], [L, J J^T - L D^{-1} L^T]]. Both systems are
/// solved by block substitution; no inverse is formed.
std::vector<double> solve_lbfgs_block(std::span<const double> diag, const SmallMatrix& lower,
                                      const SmallMatrix& chol, std::span<const double> rhs_top,
                                      std::span<const double> rhs_bot);

}  // namespace fld
