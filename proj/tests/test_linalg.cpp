// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fldetect/errors.hpp"
#include "fldetect/linalg.hpp"
#include "oracles.hpp"

using namespace fld;

namespace {

SmallMatrix to_small(const oracle::Mat& m) {
  SmallMatrix out(m.size(), m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[0].size(); ++j) out(i, j) = m[i][j];
  return out;
}

oracle::Mat to_mat(const SmallMatrix& m) {
  oracle::Mat out = oracle::zeros(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

TEST_CASE("param vector rejects non-finite entries") {
  CHECK_THROWS_AS(ParamVector({1.0, std::numeric_limits<double>::quiet_NaN()}), NonFiniteValue);
  CHECK_THROWS_AS(ParamVector({std::numeric_limits<double>::infinity()}), NonFiniteValue);
  CHECK(ParamVector::zeros(3).dim() == 3);
}

TEST_CASE("dot") {
  CHECK(dot(ParamVector{1, 2}, ParamVector{3, 4}) == 11.0);
  CHECK(dot(ParamVector{1, -7, 3}, ParamVector::zeros(3)) == 0.0);
  CHECK_THROWS_AS(dot(ParamVector{1, 2}, ParamVector{1}), DimensionError);

  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = oracle::random_vec(rng, 64);
    const auto b = oracle::random_vec(rng, 64);
    const double want = oracle::dot(a, b);
    CHECK(std::abs(dot(ParamVector(a), ParamVector(b)) - want) <= 1e-12 * std::abs(want) + 1e-15);
  }
}

TEST_CASE("norms") {
  auto n = norms(ParamVector{3, -4});
  CHECK(n.l1 == 7.0);
  CHECK(n.l2 == 5.0);
  n = norms(ParamVector::zeros(4));
  CHECK(n.l1 == 0.0);
  CHECK(n.l2 == 0.0);

  std::mt19937_64 rng(8);
  const auto v = oracle::random_vec(rng, 50);
  double l1 = 0.0;
  for (double x : v) l1 += std::abs(x);
  n = norms(ParamVector(v));
  CHECK(n.l1 == doctest::Approx(l1).epsilon(1e-12));
  CHECK(n.l2 == doctest::Approx(oracle::norm(v)).epsilon(1e-12));
  CHECK(l2_distance(ParamVector{1}, ParamVector{4}) == 3.0);
  CHECK(squared_distance(ParamVector{1, 1}, ParamVector{4, 5}) == 25.0);
}

TEST_CASE("vector arithmetic") {
  ParamVector a{1, 2, 3};
  const ParamVector b{1, 1, 1};
  CHECK(a + b == ParamVector{2, 3, 4});
  CHECK(a - b == ParamVector{0, 1, 2});
  CHECK(-a == ParamVector{-1, -2, -3});
  CHECK(2.0 * a == ParamVector{2, 4, 6});
  a.axpy(-2.0, b);
  CHECK(a == ParamVector{-1, 0, 1});
  CHECK_THROWS_AS(a += ParamVector{1}, DimensionError);
}

TEST_CASE("small matrix basics") {
  const SmallMatrix m{{1, 2}, {3, 4}};
  CHECK(m.transposed() == SmallMatrix{{1, 3}, {2, 4}});
  CHECK(m * SmallMatrix::identity(2) == m);
  CHECK(m.frobenius() == doctest::Approx(std::sqrt(30.0)));
  const std::vector<double> x{1, 1};
  CHECK(m * std::span<const double>(x) == std::vector<double>{3, 7});
  CHECK_THROWS_AS(SmallMatrix(2, 2, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(m * SmallMatrix(3, 1), DimensionError);
}

TEST_CASE("cholesky hand cases") {
  CHECK(cholesky(SmallMatrix::identity(3)) == SmallMatrix::identity(3));
  const SmallMatrix c = cholesky(SmallMatrix{{4, 2}, {2, 3}});
  CHECK(c(0, 0) == doctest::Approx(2.0));
  CHECK(c(0, 1) == 0.0);
  CHECK(c(1, 0) == doctest::Approx(1.0));
  CHECK(c(1, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  std::mt19937_64 rng(11);
  for (std::size_t n = 1; n <= 20; ++n) {
    const auto a = oracle::random_spd(rng, n, 1.0);
    const auto c = to_mat(cholesky(to_small(a)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) CHECK(c[i][j] == 0.0);
    auto ct = oracle::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) ct[i][j] = c[j][i];
    const auto r = oracle::matmul(c, ct);
    double err = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        err = std::max(err, std::abs(r[i][j] - a[i][j]));
        scale = std::max(scale, std::abs(a[i][j]));
      }
    CHECK(err <= 1e-10 * scale);
  }
}

TEST_CASE("cholesky failure carries the pivot index") {
  try {
    cholesky(SmallMatrix{{1, 0, 0}, {0, 1, 0}, {0, 0, -1}});
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.pivot_index() == 2);
    CHECK(e.pivot() <= 0.0);
  }
  CHECK_THROWS_AS(cholesky(SmallMatrix{{1, 1}, {1, 1}}), NotPositiveDefinite);
  CHECK_THROWS_AS(cholesky(SmallMatrix(2, 3)), DimensionError);
}

TEST_CASE("cholesky symmetrizes tiny asymmetry") {
  const SmallMatrix a{{4, 2 + 1e-12}, {2, 3}};
  const SmallMatrix c = cholesky(a);
  CHECK(c(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("triangular solves") {
  const std::vector<double> rhs{2, 3};
  CHECK(solve_triangular(SmallMatrix::identity(2), rhs, true, false) == rhs);
  const auto x = solve_triangular(SmallMatrix{{2, 0}, {1, 1}}, rhs, true, false);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(solve_triangular(SmallMatrix{{0, 0}, {1, 1}}, rhs, true, false), SingularMatrix);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int lower = 0; lower < 2; ++lower)
    for (int trans = 0; trans < 2; ++trans) {
      oracle::Mat t = oracle::zeros(8, 8);
      for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j)
          if ((lower && j <= i) || (!lower && j >= i)) t[i][j] = i == j ? u(rng) : u(rng) - 1.25;
      const auto b = oracle::random_vec(rng, 8);
      const auto sol = solve_triangular(to_small(t), b, lower, trans);
      oracle::Mat eff = t;
      if (trans)
        for (std::size_t i = 0; i < 8; ++i)
          for (std::size_t j = 0; j < 8; ++j) eff[i][j] = t[j][i];
      CHECK(oracle::rel_err(oracle::matvec(eff, sol), b) <= 1e-10);
    }
}

TEST_CASE("lbfgs block solve with trivial blocks") {
  const std::vector<double> diag{1, 1};
  const SmallMatrix zero(2, 2);
  const std::vector<double> top{1, 2};
  const std::vector<double> bot{3, 4};
  const auto q = solve_lbfgs_block(diag, zero, SmallMatrix::identity(2), top, bot);
  CHECK(q == std::vector<double>{-1, -2, 3, 4});
  const std::vector<double> zeros{0, 0};
  CHECK(solve_lbfgs_block(diag, zero, SmallMatrix::identity(2), zeros, zeros) ==
        std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("lbfgs block solve matches an explicit inverse") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> pos(0.2, 3.0);
  for (std::size_t n = 1; n <= 5; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> diag(n);
      for (double& d : diag) d = pos(rng);
      oracle::Mat l = oracle::zeros(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) l[i][j] = oracle::random_vec(rng, 1)[0];
      // A symmetric positive definite sigma S^T S, then J from its definition.
      const auto sts = oracle::random_spd(rng, n, 0.5);
      oracle::Mat jj = sts;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k) jj[i][j] += l[i][k] * l[j][k] / diag[k];
      const SmallMatrix chol = cholesky(to_small(jj));

      oracle::Mat m = oracle::zeros(2 * n, 2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        m[i][i] = -diag[i];
        for (std::size_t j = 0; j < n; ++j) {
          m[i][n + j] = l[j][i];
          m[n + i][j] = l[i][j];
          m[n + i][n + j] = sts[i][j];
        }
      }
      const auto top = oracle::random_vec(rng, n);
      const auto bot = oracle::random_vec(rng, n);
      oracle::Vec rhs = top;
      rhs.insert(rhs.end(), bot.begin(), bot.end());
      const auto want = oracle::matvec(oracle::inverse(m), rhs);
      const auto got = solve_lbfgs_block(diag, to_small(l), chol, top, bot);
      CHECK(oracle::rel_err(got, want) <= 1e-9);
    }
  }
}
