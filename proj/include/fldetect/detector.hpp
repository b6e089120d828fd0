// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Malicious-client detection from model-update consistency.
//
// Each round the server predicts every client's update from its previous one
// and the L-BFGS Hessian-vector product along the last global-model step,
// turns the prediction errors into l1-normalised distances, averages them over
// a window into suspicious scores, and clusters the scores. When the Gap
// statistic finds more than one cluster, the high-score cluster of a 2-means
// split is flagged.

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "fldetect/hvp.hpp"
#include "fldetect/linalg.hpp"

namespace fld {

using ClientId = std::size_t;
using UpdateMap = std::map<ClientId, ParamVector>;

enum class DetectorVariant { FLDetector, FLDNorm, FLDNoHVP };

std::string_view to_string(DetectorVariant v);
DetectorVariant parse_detector_variant(std::string_view name);

inline constexpr double kZeroDistance = 1e-15;

struct DetectorConfig {
  DetectorVariant variant = DetectorVariant::FLDetector;
  std::size_t window = 10;             // N
  std::size_t start_iteration = 50;
  std::size_t gap_max_clusters = 10;   // K
  std::size_t gap_samples = 20;        // B
  std::uint64_t rng_seed = 0;
};

struct DetectionOutcome {
  std::size_t iteration = 0;
  std::map<ClientId, double> scores;  // empty until a distance round exists
  /// Gap-statistic cluster count; 0 when clustering did not run this round.
  std::size_t selected_k = 0;
  std::set<ClientId> flagged;
  bool fallback_used = false;
};

struct Prediction {
  UpdateMap updates;
  bool fallback_used = false;
};

/// Per-client distances in key order: |predicted - received| for FLDetector
/// and FLDNoHVP, |received| for FLDNorm. Key sets must match.
std::vector<double> distance_vector(const UpdateMap& predicted, const UpdateMap& received,
                                    DetectorVariant variant);

/// d / |d|_1, or the uniform vector when |d|_1 < kZeroDistance.
std::vector<double> normalize_distances(std::span<const double> d);

struct KMeans1D {
  std::vector<std::size_t> assignments;  // cluster per input, clusters ordered by center
  std::vector<double> centers;
  double dispersion = 0.0;  // within-cluster sum of squares
};

/// Exact 1-D k-means: optimal contiguous partition of the sorted values by
/// dynamic programming. Deterministic; ties resolve to the leftmost split.
/// Throws InvalidArgument when k is 0 or exceeds the number of values.
KMeans1D kmeans_1d(std::span<const double> values, std::size_t k);

/// Optimal within-cluster dispersion for every k in 1..k_max.
std::vector<double> kmeans_1d_dispersions(std::span<const double> values, std::size_t k_max);

struct GapResult {
  std::size_t k = 1;
  std::vector<double> gap;      // Gap(k), index k-1
  std::vector<double> s_prime;  // sqrt((1+B)/B) * sd(k)
};

/// Gap statistic on min-max normalised scores with B uniform [0,1]
/// reference sets. Returns k = 1 for degenerate (constant) scores.
GapResult gap_statistics_detail(std::span<const double> scores, std::size_t k_max,
                                std::size_t samples, std::uint64_t seed);

std::size_t gap_statistics(std::span<const double> scores, std::size_t k_max,
                           std::size_t samples, std::uint64_t seed);

/// Server-side detector state machine; one instance per training segment.
class Detector {
 public:
  Detector(DetectorConfig cfg, std::size_t dim);

  const DetectorConfig& config() const noexcept { return cfg_; }

  /// Predicted updates for round t (needs updates from round t-1).
  Prediction predict_updates(const ParamVector& w_t, const ParamVector& w_prev) const;

  /// Windowed mean of the stored normalised distances; averages over the
  /// rounds available while fewer than N are stored.
  std::map<ClientId, double> suspicious_scores() const;

  /// Runs one round: predict, score, and (from start_iteration on) cluster.
  /// `global_update` is the aggregated g_t; `w_prev` is absent in round 1.
  DetectionOutcome detect(const UpdateMap& received, const ParamVector& global_update,
                          const ParamVector& w_t, const std::optional<ParamVector>& w_prev,
                          std::size_t t);

  const HistoryWindow& hessian_window() const noexcept { return window_; }
  const UpdateMap& prev_updates() const noexcept { return prev_updates_; }
  const std::map<ClientId, std::deque<double>>& distance_history() const noexcept {
    return history_;
  }

  friend bool operator==(const Detector& a, const Detector& b);

 private:
  DetectorConfig cfg_;
  HistoryWindow window_;
  UpdateMap prev_updates_;
  std::map<ClientId, std::deque<double>> history_;
  std::optional<ParamVector> prev_global_update_;
};

/// Indices (into `scores`) of the higher-mean cluster of the 2-means split of
/// the min-max normalised scores.
std::vector<std::size_t> high_score_cluster(std::span<const double> scores);

}  // namespace fld
