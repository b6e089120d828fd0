// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <set>

#include "fldetect/attacks.hpp"
#include "fldetect/dataset.hpp"
#include "fldetect/detector.hpp"
#include "fldetect/model.hpp"

namespace fld {

struct DetectionMetrics {
  double dacc = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
};

/// dacc = correct / n, fpr = |flagged \ truth| / |benign|,
/// fnr = |truth \ flagged| / |truth|. Empty denominators give 0.
DetectionMetrics detection_metrics(const std::set<ClientId>& truth,
                                   const std::set<ClientId>& flagged, std::size_t n);

struct Metrics {
  double dacc = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  double tacc = 0.0;
  double asr = 0.0;
};

/// Fraction of `test` classified correctly.
double accuracy(const ModelSpec& spec, const ParamVector& w, const Dataset& test);

/// Fraction of trigger-embedded test inputs predicted as `target`, over the
/// examples whose true label is not `target`. Returns 0 when every example
/// already carries the target label.
double compute_asr(const ModelSpec& spec, const ParamVector& w, const Dataset& test,
                   const TriggerSpec& trigger, std::size_t target);

/// One row of the per-round trace.
struct RoundRecord {
  std::size_t iteration = 0;
  std::size_t restart_segment = 0;
  double mean_score_benign = 0.0;     // NaN when no scores exist yet
  double mean_score_malicious = 0.0;  // NaN when no active malicious client
  std::size_t selected_k = 0;
  std::size_t flagged_count = 0;
  bool fallback_used = false;
  double global_loss = 0.0;
  std::optional<double> tacc_snapshot;
};

}  // namespace fld
