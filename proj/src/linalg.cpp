// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "fldetect/errors.hpp"

namespace fld {

namespace {

void check_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  if (!all_finite()) throw NonFiniteValue("ParamVector: non-finite entry");
}

ParamVector::ParamVector(std::initializer_list<double> values)
    : ParamVector(std::vector<double>(values)) {}

ParamVector ParamVector::zeros(std::size_t dim) { return ParamVector(std::vector<double>(dim, 0.0)); }

bool ParamVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ParamVector& ParamVector::operator+=(const ParamVector& o) {
  check_same_dim(dim(), o.dim(), "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& o) {
  check_same_dim(dim(), o.dim(), "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ParamVector& ParamVector::axpy(double s, const ParamVector& x) {
  check_same_dim(dim(), x.dim(), "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * x.values_[i];
  return *this;
}

ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
ParamVector operator-(ParamVector a) { return a *= -1.0; }
ParamVector operator*(double s, ParamVector a) { return a *= s; }

double dot(std::span<const double> a, std::span<const double> b) {
  check_same_dim(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double dot(const ParamVector& a, const ParamVector& b) { return dot(a.values(), b.values()); }

Norms norms(const ParamVector& a) {
  Norms n;
  double sq = 0.0;
  for (double v : a) {
    n.l1 += std::abs(v);
    sq += v * v;
  }
  n.l2 = std::sqrt(sq);
  return n;
}

double l2_norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

double squared_distance(const ParamVector& a, const ParamVector& b) {
  check_same_dim(a.dim(), b.dim(), "squared_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
  return std::sqrt(squared_distance(a, b));
}

// ---------------------------------------------------------------------------

SmallMatrix::SmallMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

SmallMatrix::SmallMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("SmallMatrix: entry count does not match shape");
  }
  if (std::any_of(data_.begin(), data_.end(), [](double v) { return !std::isfinite(v); })) {
    throw NonFiniteValue("SmallMatrix: non-finite entry");
  }
}

SmallMatrix::SmallMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("SmallMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

SmallMatrix SmallMatrix::identity(std::size_t n) {
  SmallMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SmallMatrix SmallMatrix::transposed() const {
  SmallMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double SmallMatrix::frobenius() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

SmallMatrix operator*(const SmallMatrix& a, const SmallMatrix& b) {
  check_same_dim(a.cols(), b.rows(), "matrix product");
  SmallMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

SmallMatrix operator+(const SmallMatrix& a, const SmallMatrix& b) {
  check_same_dim(a.rows(), b.rows(), "matrix sum");
  check_same_dim(a.cols(), b.cols(), "matrix sum");
  SmallMatrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += b(i, j);
  return out;
}

SmallMatrix operator-(const SmallMatrix& a, const SmallMatrix& b) {
  check_same_dim(a.rows(), b.rows(), "matrix difference");
  check_same_dim(a.cols(), b.cols(), "matrix difference");
  SmallMatrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) -= b(i, j);
  return out;
}

std::vector<double> operator*(const SmallMatrix& a, std::span<const double> x) {
  check_same_dim(a.cols(), x.size(), "matrix-vector product");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

// ---------------------------------------------------------------------------

SmallMatrix cholesky(const SmallMatrix& m) {
  if (!m.square()) throw DimensionError("cholesky: matrix is not square");
  const std::size_t n = m.rows();

  double max_abs = 0.0;
  double max_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      max_abs = std::max(max_abs, std::abs(m(i, j)));
      max_dev = std::max(max_dev, std::abs(m(i, j) - m(j, i)));
    }

  SmallMatrix a = m;
  if (max_dev > 0.0) {
    if (max_dev > kSymmetryTolerance * std::max(max_abs, 1.0)) {
      std::fprintf(stderr, "[fldetect] cholesky: symmetrizing input (max asymmetry %.3e)\n",
                   max_dev);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) {
        const double avg = 0.5 * (m(i, j) + m(j, i));
        a(i, j) = avg;
        a(j, i) = avg;
      }
  }

  SmallMatrix c(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= c(j, k) * c(j, k);
    if (!(pivot > kPositiveDefiniteFloor)) throw NotPositiveDefinite(j, pivot);
    const double d = std::sqrt(pivot);
    c(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= c(i, k) * c(j, k);
      c(i, j) = s / d;
    }
  }
  return c;
}

std::vector<double> solve_triangular(const SmallMatrix& t, std::span<const double> rhs,
                                     bool lower, bool transposed) {
  if (!t.square()) throw DimensionError("solve_triangular: matrix is not square");
  const std::size_t n = t.rows();
  check_same_dim(n, rhs.size(), "solve_triangular");
  for (std::size_t i = 0; i < n; ++i) {
    if (t(i, i) == 0.0) {
      throw SingularMatrix("solve_triangular: zero diagonal at " + std::to_string(i));
    }
  }

  // Transposing flips the orientation; access through `at` to avoid a copy.
  const bool effective_lower = lower != transposed;
  auto at = [&](std::size_t r, std::size_t c) { return transposed ? t(c, r) : t(r, c); };

  std::vector<double> x(rhs.begin(), rhs.end());
  if (effective_lower) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t k = 0; k < i; ++k) s -= at(i, k) * x[k];
      x[i] = s / at(i, i);
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= at(ii, k) * x[k];
      x[ii] = s / at(ii, ii);
    }
  }
  return x;
}

std::vector<double> solve_lbfgs_block(std::span<const double> diag, const SmallMatrix& lower,
                                      const SmallMatrix& chol, std::span<const double> rhs_top,
                                      std::span<const double> rhs_bot) {
  const std::size_t n = diag.size();
  check_same_dim(n, lower.rows(), "solve_lbfgs_block L");
  check_same_dim(n, lower.cols(), "solve_lbfgs_block L");
  check_same_dim(n, chol.rows(), "solve_lbfgs_block J");
  check_same_dim(n, chol.cols(), "solve_lbfgs_block J");
  check_same_dim(n, rhs_top.size(), "solve_lbfgs_block rhs");
  check_same_dim(n, rhs_bot.size(), "solve_lbfgs_block rhs");

  std::vector<double> sqrt_d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(diag[i] > 0.0)) {
      throw SingularMatrix("solve_lbfgs_block: non-positive D entry at " + std::to_string(i));
    }
    sqrt_d[i] = std::sqrt(diag[i]);
  }

  // Forward substitution through M1.
  //   D^{1/2} u = top
  //   -L D^{-1/2} u + J w = bot
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = rhs_top[i] / sqrt_d[i];
  std::vector<double> r(rhs_bot.begin(), rhs_bot.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += lower(i, k) * (u[k] / sqrt_d[k]);
    r[i] += s;
  }
  const std::vector<double> w = solve_triangular(chol, r, /*lower=*/true, /*transposed=*/false);

  // Backward substitution through M2.
  //   J^T y = w
  //   -D^{1/2} x + D^{-1/2} L^T y = u
  std::vector<double> q(2 * n);
  const std::vector<double> y = solve_triangular(chol, w, /*lower=*/true, /*transposed=*/true);
  for (std::size_t i = 0; i < n; ++i) {
    double lty = 0.0;
    for (std::size_t k = 0; k < n; ++k) lty += lower(k, i) * y[k];
    q[i] = (lty / sqrt_d[i] - u[i]) / sqrt_d[i];
    q[n + i] = y[i];
  }
  return q;
}

}  // namespace fld
