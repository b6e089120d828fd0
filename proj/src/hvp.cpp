// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/hvp.hpp"

#include <string>
#include <vector>

#include "fldetect/errors.hpp"

namespace fld {

HistoryWindow::HistoryWindow(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim) {
  if (capacity == 0) throw InvalidArgument("HistoryWindow: capacity must be positive");
}

AdmissionReport HistoryWindow::push_pair(const ParamVector& dw, const ParamVector& dg) {
  if (dw.dim() != dim_ || dg.dim() != dim_) {
    throw DimensionError("push_pair: expected dimension " + std::to_string(dim_));
  }
  AdmissionReport report;
  report.curvature = dot(dg, dw);
  if (!(report.curvature > kCurvatureFloor * dot(dw, dw))) return report;

  report.admitted = true;
  if (pairs_.size() == capacity_) {
    pairs_.pop_front();
    report.evicted = true;
  }
  pairs_.push_back({dw, dg});
  return report;
}

ParamVector hessian_vector_product(const HistoryWindow& window, const ParamVector& v) {
  if (window.empty()) throw EmptyWindow();
  if (v.dim() != window.dim()) throw DimensionError("hessian_vector_product: dimension mismatch");

  const auto& pairs = window.pairs();
  const std::size_t n = pairs.size();

  SmallMatrix sts(n, n);
  SmallMatrix sty(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double s = dot(pairs[i].dw, pairs[j].dw);
      sts(i, j) = s;
      sts(j, i) = s;
    }
    for (std::size_t j = 0; j < n; ++j) sty(i, j) = dot(pairs[i].dw, pairs[j].dg);
  }

  std::vector<double> diag(n);
  SmallMatrix lower(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = sty(i, i);
    for (std::size_t j = 0; j < i; ++j) lower(i, j) = sty(i, j);
  }

  const auto& newest = pairs.back();
  const double sigma = dot(newest.dg, newest.dw) / dot(newest.dw, newest.dw);

  // sigma S^T S + L D^{-1} L^T
  SmallMatrix middle(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = sigma * sts(i, j);
      for (std::size_t k = 0; k < n; ++k) s += lower(i, k) * lower(j, k) / diag[k];
      middle(i, j) = s;
    }
  const SmallMatrix chol = cholesky(middle);

  std::vector<double> top(n);
  std::vector<double> bot(n);
  for (std::size_t i = 0; i < n; ++i) {
    top[i] = dot(pairs[i].dg, v);
    bot[i] = sigma * dot(pairs[i].dw, v);
  }
  const std::vector<double> q = solve_lbfgs_block(diag, lower, chol, top, bot);

  ParamVector out = sigma * v;
  for (std::size_t i = 0; i < n; ++i) {
    out.axpy(-q[i], pairs[i].dg);
    out.axpy(-sigma * q[n + i], pairs[i].dw);
  }
  return out;
}

SmallMatrix dense_bfgs_oracle(const HistoryWindow& window, InitialScaling scaling) {
  if (window.empty()) throw EmptyWindow();
  const auto& pairs = window.pairs();
  const std::size_t p = window.dim();

  const auto& ref = scaling == InitialScaling::Newest ? pairs.back() : pairs.front();
  const double sigma = dot(ref.dg, ref.dw) / dot(ref.dw, ref.dw);

  SmallMatrix b(p, p);
  for (std::size_t i = 0; i < p; ++i) b(i, i) = sigma;

  for (const auto& [dw, dg] : pairs) {
    const std::vector<double> bs = b * dw.values();
    const double sbs = dot(dw.values(), bs);
    const double ys = dot(dg, dw);
    if (!(sbs > 0.0) || !(ys > 0.0)) {
      throw NotPositiveDefinite(0, sbs > 0.0 ? ys : sbs);
    }
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        b(i, j) += dg[i] * dg[j] / ys - bs[i] * bs[j] / sbs;
      }
  }
  return b;
}

}  // namespace fld
