// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations used by the tests. These are written directly
// from the definitions with plain loops and share no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double rel_err(const Vec& got, const Vec& want) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, Vec(c, 0.0)); }

inline Mat identity(std::size_t n) {
  Mat m = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Vec matvec(const Mat& a, const Vec& x) {
  Vec y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = dot(a[i], x);
  return y;
}

/// Gauss-Jordan inverse with partial pivoting.
inline Mat inverse(Mat a) {
  const std::size_t n = a.size();
  Mat inv = identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) throw std::runtime_error("oracle::inverse: singular");
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

/// Dense BFGS recursion over pairs (s_i, y_i), oldest first, starting from
/// sigma * I with sigma = y^T s / s^T s of the pair at `scale_index`.
inline Mat bfgs_dense(const std::vector<Vec>& s, const std::vector<Vec>& y, std::size_t scale_index) {
  const std::size_t p = s[0].size();
  const double sigma = dot(y[scale_index], s[scale_index]) / dot(s[scale_index], s[scale_index]);
  Mat b = zeros(p, p);
  for (std::size_t i = 0; i < p; ++i) b[i][i] = sigma;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Vec bs = matvec(b, s[k]);
    const double sbs = dot(s[k], bs);
    const double ys = dot(y[k], s[k]);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        b[i][j] += -bs[i] * bs[j] / sbs + y[k][i] * y[k][j] / ys;
  }
  return b;
}

/// Krum by definition: score_i = sum of the n-k-2 smallest squared distances
/// to other updates; lowest score wins, lowest index on ties.
inline std::size_t krum_index(const std::vector<Vec>& u, std::size_t k) {
  const std::size_t n = u.size();
  const std::size_t m = n - k - 2;
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    Vec d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < u[i].size(); ++c) s += (u[i][c] - u[j][c]) * (u[i][c] - u[j][c]);
      d.push_back(s);
    }
    std::sort(d.begin(), d.end());
    const double score = std::accumulate(d.begin(), d.begin() + static_cast<long>(m), 0.0);
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

inline Vec column(const std::vector<Vec>& u, std::size_t c) {
  Vec col;
  for (const auto& v : u) col.push_back(v[c]);
  std::sort(col.begin(), col.end());
  return col;
}

inline Vec trimmed_mean(const std::vector<Vec>& u, std::size_t k) {
  Vec out;
  for (std::size_t c = 0; c < u[0].size(); ++c) {
    const Vec col = column(u, c);
    double s = 0.0;
    for (std::size_t i = k; i < col.size() - k; ++i) s += col[i];
    out.push_back(s / static_cast<double>(col.size() - 2 * k));
  }
  return out;
}

inline Vec median(const std::vector<Vec>& u) {
  Vec out;
  for (std::size_t c = 0; c < u[0].size(); ++c) {
    const Vec col = column(u, c);
    const std::size_t n = col.size();
    out.push_back(n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]));
  }
  return out;
}

inline double sse(const Vec& v) {
  if (v.empty()) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

/// Best 2-way split of the sorted values: returns (dispersion, size of low part).
inline std::pair<double, std::size_t> best_contiguous_split(Vec v) {
  std::sort(v.begin(), v.end());
  double best = std::numeric_limits<double>::infinity();
  std::size_t cut = 1;
  for (std::size_t c = 1; c < v.size(); ++c) {
    const double cost = sse(Vec(v.begin(), v.begin() + static_cast<long>(c))) +
                        sse(Vec(v.begin() + static_cast<long>(c), v.end()));
    if (cost < best) {
      best = cost;
      cut = c;
    }
  }
  return {best, cut};
}

inline Vec random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

/// Symmetric positive definite matrix R^T R / p + shift * I.
inline Mat random_spd(std::mt19937_64& rng, std::size_t p, double shift) {
  Mat r(p);
  for (auto& row : r) row = random_vec(rng, p);
  Mat a = zeros(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += r[k][i] * r[k][j];
      a[i][j] = s / static_cast<double>(p) + (i == j ? shift : 0.0);
    }
  return a;
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double lambda_max(const Mat& a) {
  Vec v(a.size(), 1.0);
  double lam = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Vec w = matvec(a, v);
    const double nw = norm(w);
    if (nw == 0.0) return 0.0;
    for (double& x : w) x /= nw;
    if (std::abs(nw - lam) <= 1e-14 * nw) {
      lam = nw;
      break;
    }
    lam = nw;
    v = w;
  }
  return lam;
}

}  // namespace oracle
