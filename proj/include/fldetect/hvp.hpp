// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Compact-representation L-BFGS Hessian-vector product over a sliding window
// of global-model differences and global-update differences.

#pragma once

#include <cstddef>
#include <deque>

#include "fldetect/linalg.hpp"

namespace fld {

inline constexpr double kCurvatureFloor = 1e-10;

struct CurvaturePair {
  ParamVector dw;  // w_t - w_{t-1}
  ParamVector dg;  // g_t - g_{t-1}
};

struct AdmissionReport {
  bool admitted = false;
  bool evicted = false;
  double curvature = 0.0;  // dg^T dw
};

/// Ring buffer of the most recent `capacity` admitted curvature pairs, oldest
/// first. A pair is admitted only when dg^T dw > kCurvatureFloor * |dw|^2.
class HistoryWindow {
 public:
  HistoryWindow(std::size_t capacity, std::size_t dim);

  AdmissionReport push_pair(const ParamVector& dw, const ParamVector& dg);
  void clear() noexcept { pairs_.clear(); }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const std::deque<CurvaturePair>& pairs() const noexcept { return pairs_; }

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::deque<CurvaturePair> pairs_;
};

/// H v for the L-BFGS estimate built from the window. The initial scaling
/// sigma comes from the most recent pair. Throws EmptyWindow, DimensionError,
/// or NotPositiveDefinite when the middle matrix cannot be factored.
ParamVector hessian_vector_product(const HistoryWindow& window, const ParamVector& v);

enum class InitialScaling { Newest, Oldest };

/// Explicit p x p BFGS matrix built by the rank-two recursion, oldest pair
/// first, from B0 = sigma * I. With InitialScaling::Newest it is the same
/// matrix the compact product applies; Oldest takes sigma from the first pair.
/// Test-scale only (p up to a few hundred).
SmallMatrix dense_bfgs_oracle(const HistoryWindow& window,
                              InitialScaling scaling = InitialScaling::Newest);

}  // namespace fld
