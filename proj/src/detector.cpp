// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fldetect/errors.hpp"
#include "fldetect/rng.hpp"

namespace fld {

std::string_view to_string(DetectorVariant v) {
  switch (v) {
    case DetectorVariant::FLDetector: return "fldetector";
    case DetectorVariant::FLDNorm: return "fld_norm";
    case DetectorVariant::FLDNoHVP: return "fld_nohvp";
  }
  return "?";
}

DetectorVariant parse_detector_variant(std::string_view name) {
  if (name == "fldetector") return DetectorVariant::FLDetector;
  if (name == "fld_norm" || name == "fld-norm") return DetectorVariant::FLDNorm;
  if (name == "fld_nohvp" || name == "fld-nohvp") return DetectorVariant::FLDNoHVP;
  throw InvalidArgument("unknown detector variant '" + std::string(name) + "'");
}

std::vector<double> distance_vector(const UpdateMap& predicted, const UpdateMap& received,
                                    DetectorVariant variant) {
  std::vector<double> d;
  d.reserve(received.size());
  if (variant == DetectorVariant::FLDNorm) {
    for (const auto& [id, g] : received) d.push_back(l2_norm(g));
    return d;
  }
  if (predicted.size() != received.size()) {
    throw InvalidArgument("distance_vector: predicted and received client sets differ");
  }
  auto it = predicted.begin();
  for (const auto& [id, g] : received) {
    if (it->first != id) throw InvalidArgument("distance_vector: client sets differ");
    d.push_back(l2_distance(it->second, g));
    ++it;
  }
  return d;
}

std::vector<double> normalize_distances(std::span<const double> d) {
  double l1 = 0.0;
  for (double v : d) {
    if (v < 0.0) throw InvalidArgument("normalize_distances: negative distance");
    l1 += v;
  }
  std::vector<double> out(d.size());
  if (l1 < kZeroDistance) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(d.size()));
    return out;
  }
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] / l1;
  return out;
}

// ---------------------------------------------------------------------------
// 1-D k-means by dynamic programming over sorted values.

namespace {

struct PrefixCost {
  std::vector<double> s1;
  std::vector<double> s2;

  explicit PrefixCost(std::span<const double> sorted) : s1(sorted.size() + 1, 0.0), s2(s1) {
    // Centre first to limit cancellation in s2 - s1^2/len.
    const double shift = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double v = sorted[i] - shift;
      s1[i + 1] = s1[i] + v;
      s2[i + 1] = s2[i] + v * v;
    }
  }

  /// Sum of squares about the mean of sorted[a, b).
  double operator()(std::size_t a, std::size_t b) const {
    const double len = static_cast<double>(b - a);
    const double sum = s1[b] - s1[a];
    return std::max(0.0, (s2[b] - s2[a]) - sum * sum / len);
  }
};

struct DpTables {
  std::vector<std::vector<double>> cost;       // cost[k-1][j]: first j points, k clusters
  std::vector<std::vector<std::size_t>> split; // start index of the last cluster
};

void fill_row(const PrefixCost& pc, const std::vector<double>& prev, std::vector<double>& row,
              std::vector<std::size_t>& split, std::size_t k, std::size_t jlo, std::size_t jhi,
              std::size_t optlo, std::size_t opthi) {
  if (jlo > jhi) return;
  const std::size_t mid = jlo + (jhi - jlo) / 2;
  const std::size_t lo = std::max(optlo, k - 1);
  const std::size_t hi = std::min(opthi, mid - 1);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = lo;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double c = prev[i] + pc(i, mid);
    if (c < best) {
      best = c;
      best_i = i;
    }
  }
  row[mid] = best;
  split[mid] = best_i;
  if (mid > jlo) fill_row(pc, prev, row, split, k, jlo, mid - 1, optlo, best_i);
  fill_row(pc, prev, row, split, k, mid + 1, jhi, best_i, opthi);
}

DpTables solve_dp(std::span<const double> sorted, std::size_t k_max) {
  const std::size_t n = sorted.size();
  const PrefixCost pc(sorted);
  DpTables t;
  t.cost.assign(k_max, std::vector<double>(n + 1, std::numeric_limits<double>::infinity()));
  t.split.assign(k_max, std::vector<std::size_t>(n + 1, 0));
  for (std::size_t j = 1; j <= n; ++j) t.cost[0][j] = pc(0, j);
  for (std::size_t k = 2; k <= k_max; ++k) {
    fill_row(pc, t.cost[k - 2], t.cost[k - 1], t.split[k - 1], k, k, n, k - 1, n - 1);
  }
  return t;
}

void check_values(std::span<const double> values, std::size_t k) {
  if (k == 0) throw InvalidArgument("kmeans_1d: k must be positive");
  if (k > values.size()) throw InvalidArgument("kmeans_1d: k exceeds number of values");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("kmeans_1d: non-finite value");
  }
}

}  // namespace

KMeans1D kmeans_1d(std::span<const double> values, std::size_t k) {
  check_values(values, k);
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = values[order[i]];

  const DpTables t = solve_dp(sorted, k);

  KMeans1D out;
  out.assignments.assign(n, 0);
  out.centers.assign(k, 0.0);
  std::size_t end = n;
  for (std::size_t c = k; c-- > 0;) {
    const std::size_t begin = c == 0 ? 0 : t.split[c][end];
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      out.assignments[order[i]] = c;
      sum += sorted[i];
    }
    out.centers[c] = sum / static_cast<double>(end - begin);
    end = begin;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - out.centers[out.assignments[i]];
    out.dispersion += d * d;
  }
  return out;
}

std::vector<double> kmeans_1d_dispersions(std::span<const double> values, std::size_t k_max) {
  check_values(values, k_max);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const DpTables t = solve_dp(sorted, k_max);
  std::vector<double> out(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) out[k - 1] = t.cost[k - 1][sorted.size()];
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<std::vector<double>> min_max_normalize(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  if (!(range >= kZeroDistance)) return std::nullopt;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / range;
  return out;
}

double safe_log(double v) { return std::log(std::max(v, std::numeric_limits<double>::min())); }

}  // namespace

GapResult gap_statistics_detail(std::span<const double> scores, std::size_t k_max,
                                std::size_t samples, std::uint64_t seed) {
  if (scores.size() < 2) throw InvalidArgument("gap_statistics: need at least two scores");
  if (k_max < 2) throw InvalidArgument("gap_statistics: K must be at least 2");
  if (samples == 0) throw InvalidArgument("gap_statistics: B must be positive");

  GapResult result;
  const auto x = min_max_normalize(scores);
  if (!x) return result;

  const std::size_t n = x->size();
  const std::size_t kk = std::min(k_max, n);
  const std::vector<double> dispersion = kmeans_1d_dispersions(*x, kk);

  // One set of B reference samples serves every k, so the gap differences
  // compared by the stopping rule share their reference noise.
  Rng rng(seed);
  std::vector<std::vector<double>> ref_logs(samples);
  std::vector<double> ref(n);
  for (auto& row : ref_logs) {
    for (double& r : ref) r = uniform01(rng);
    row = kmeans_1d_dispersions(ref, kk);
    for (double& v : row) v = safe_log(v);
  }
  const double b = static_cast<double>(samples);
  result.gap.resize(kk);
  result.s_prime.resize(kk);
  for (std::size_t k = 1; k <= kk; ++k) {
    double mean = 0.0;
    for (const auto& row : ref_logs) mean += row[k - 1];
    mean /= b;
    double var = 0.0;
    for (const auto& row : ref_logs) var += (row[k - 1] - mean) * (row[k - 1] - mean);
    result.gap[k - 1] = mean - safe_log(dispersion[k - 1]);
    result.s_prime[k - 1] = std::sqrt((1.0 + b) / b) * std::sqrt(var / b);
  }

  result.k = kk;
  for (std::size_t k = 1; k < kk; ++k) {
    if (result.gap[k - 1] - result.gap[k] + result.s_prime[k] >= 0.0) {
      result.k = k;
      break;
    }
  }
  return result;
}

std::size_t gap_statistics(std::span<const double> scores, std::size_t k_max,
                           std::size_t samples, std::uint64_t seed) {
  return gap_statistics_detail(scores, k_max, samples, seed).k;
}

std::vector<std::size_t> high_score_cluster(std::span<const double> scores) {
  std::vector<std::size_t> out;
  if (scores.size() < 2) return out;
  const auto x = min_max_normalize(scores);
  if (!x) return out;
  const KMeans1D km = kmeans_1d(*x, 2);
  for (std::size_t i = 0; i < km.assignments.size(); ++i)
    if (km.assignments[i] == 1) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------

Detector::Detector(DetectorConfig cfg, std::size_t dim) : cfg_(cfg), window_(cfg.window, dim) {
  if (cfg.window == 0) throw InvalidArgument("detector: window must be positive");
}

Prediction Detector::predict_updates(const ParamVector& w_t, const ParamVector& w_prev) const {
  Prediction pred;
  pred.updates = prev_updates_;
  if (cfg_.variant != DetectorVariant::FLDetector) return pred;
  if (window_.empty()) {
    pred.fallback_used = true;
    return pred;
  }
  ParamVector hv;
  try {
    hv = hessian_vector_product(window_, w_t - w_prev);
  } catch (const NotPositiveDefinite&) {
    pred.fallback_used = true;
    return pred;
  } catch (const SingularMatrix&) {
    pred.fallback_used = true;
    return pred;
  }
  for (auto& [id, g] : pred.updates) g += hv;
  return pred;
}

std::map<ClientId, double> Detector::suspicious_scores() const {
  std::map<ClientId, double> scores;
  for (const auto& [id, hist] : history_) {
    if (hist.empty()) throw InvalidArgument("suspicious_scores: empty history");
    double s = 0.0;
    for (double d : hist) s += d;
    scores[id] = s / static_cast<double>(hist.size());
  }
  if (scores.empty()) throw InvalidArgument("suspicious_scores: no history");
  return scores;
}

DetectionOutcome Detector::detect(const UpdateMap& received, const ParamVector& global_update,
                                  const ParamVector& w_t, const std::optional<ParamVector>& w_prev,
                                  std::size_t t) {
  if (t == 0) throw InvalidArgument("detect: iterations start at 1");
  DetectionOutcome out;
  out.iteration = t;

  if (w_prev && !prev_updates_.empty()) {
    if (received.size() != prev_updates_.size() ||
        !std::equal(received.begin(), received.end(), prev_updates_.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw InvalidArgument("detect: client set changed without a detector reset");
    }
    const Prediction pred = predict_updates(w_t, *w_prev);
    out.fallback_used = pred.fallback_used;
    const std::vector<double> d = normalize_distances(distance_vector(pred.updates, received, cfg_.variant));
    std::size_t i = 0;
    for (const auto& [id, g] : received) {
      auto& hist = history_[id];
      hist.push_back(d[i++]);
      if (hist.size() > cfg_.window) hist.pop_front();
    }
  }

  if (!history_.empty()) {
    out.scores = suspicious_scores();
    if (t >= cfg_.start_iteration && out.scores.size() >= 2) {
      std::vector<ClientId> ids;
      std::vector<double> s;
      for (const auto& [id, v] : out.scores) {
        ids.push_back(id);
        s.push_back(v);
      }
      out.selected_k =
          gap_statistics(s, cfg_.gap_max_clusters, cfg_.gap_samples, derive_seed(cfg_.rng_seed, {t}));
      if (out.selected_k > 1) {
        for (std::size_t idx : high_score_cluster(s)) out.flagged.insert(ids[idx]);
      }
    }
  }

  if (w_prev && prev_global_update_) {
    window_.push_pair(w_t - *w_prev, global_update - *prev_global_update_);
  }
  prev_updates_ = received;
  prev_global_update_ = global_update;
  return out;
}

bool operator==(const Detector& a, const Detector& b) {
  auto same_window = [](const HistoryWindow& x, const HistoryWindow& y) {
    if (x.capacity() != y.capacity() || x.dim() != y.dim() || x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x.pairs()[i].dw == y.pairs()[i].dw) || !(x.pairs()[i].dg == y.pairs()[i].dg)) {
        return false;
      }
    }
    return true;
  };
  return a.cfg_.variant == b.cfg_.variant && a.cfg_.window == b.cfg_.window &&
         a.cfg_.start_iteration == b.cfg_.start_iteration &&
         a.cfg_.gap_max_clusters == b.cfg_.gap_max_clusters &&
         a.cfg_.gap_samples == b.cfg_.gap_samples && a.cfg_.rng_seed == b.cfg_.rng_seed &&
         same_window(a.window_, b.window_) && a.prev_updates_ == b.prev_updates_ &&
         a.history_ == b.history_ && a.prev_global_update_ == b.prev_global_update_;
}

}  // namespace fld
