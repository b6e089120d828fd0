// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/aggregation.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "fldetect/errors.hpp"

namespace fld {

namespace {

std::size_t common_dim(std::span<const ParamVector> updates, const char* what) {
  if (updates.empty()) throw InvalidArgument(std::string(what) + ": no updates");
  const std::size_t p = updates.front().dim();
  for (const auto& u : updates) {
    if (u.dim() != p) throw DimensionError(std::string(what) + ": updates differ in dimension");
  }
  return p;
}

}  // namespace

std::string_view to_string(AggregationRule rule) {
  switch (rule) {
    case AggregationRule::FedAvg: return "fedavg";
    case AggregationRule::Krum: return "krum";
    case AggregationRule::TrimmedMean: return "trimmed_mean";
    case AggregationRule::Median: return "median";
  }
  return "?";
}

AggregationRule parse_aggregation_rule(std::string_view name) {
  if (name == "fedavg") return AggregationRule::FedAvg;
  if (name == "krum") return AggregationRule::Krum;
  if (name == "trimmed_mean" || name == "trimmed-mean" || name == "trim") {
    return AggregationRule::TrimmedMean;
  }
  if (name == "median") return AggregationRule::Median;
  throw InvalidArgument("unknown aggregation rule '" + std::string(name) + "'");
}

void validate(const AggregatorConfig& cfg, std::size_t n) {
  const auto k = static_cast<long long>(cfg.byz_param);
  const auto nn = static_cast<long long>(n);
  if (cfg.rule == AggregationRule::Krum && nn - k - 2 < 1) {
    throw InvalidArgument("krum requires n - k - 2 >= 1 (n=" + std::to_string(n) +
                          ", k=" + std::to_string(k) + ")");
  }
  if (cfg.rule == AggregationRule::TrimmedMean && nn - 2 * k < 1) {
    throw InvalidArgument("trimmed_mean requires n - 2k >= 1 (n=" + std::to_string(n) +
                          ", k=" + std::to_string(k) + ")");
  }
}

ParamVector fedavg(std::span<const ParamVector> updates) {
  const std::size_t p = common_dim(updates, "fedavg");
  std::vector<double> sum(p, 0.0);
  for (const auto& u : updates)
    for (std::size_t j = 0; j < p; ++j) sum[j] += u[j];
  const double inv = 1.0 / static_cast<double>(updates.size());
  for (double& v : sum) v *= inv;
  return ParamVector(std::move(sum));
}

KrumChoice krum(std::span<const ParamVector> updates, std::size_t k) {
  common_dim(updates, "krum");
  const std::size_t n = updates.size();
  validate({AggregationRule::Krum, k}, n);
  const std::size_t neighbours = n - k - 2;

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(updates[i], updates[j]);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }

  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> row;
  row.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(dist[i * n + j]);
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours),
                      row.end());
    double score = 0.0;
    for (std::size_t j = 0; j < neighbours; ++j) score += row[j];
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return {updates[best], best};
}

ParamVector trimmed_mean(std::span<const ParamVector> updates, std::size_t k) {
  const std::size_t p = common_dim(updates, "trimmed_mean");
  const std::size_t n = updates.size();
  validate({AggregationRule::TrimmedMean, k}, n);

  std::vector<double> out(p);
  std::vector<double> column(n);
  const double inv = 1.0 / static_cast<double>(n - 2 * k);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = updates[i][j];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (std::size_t i = k; i < n - k; ++i) s += column[i];
    out[j] = s * inv;
  }
  return ParamVector(std::move(out));
}

ParamVector median(std::span<const ParamVector> updates) {
  const std::size_t p = common_dim(updates, "median");
  const std::size_t n = updates.size();
  const std::size_t mid = n / 2;

  std::vector<double> out(p);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = updates[i][j];
    auto mid_it = column.begin() + static_cast<std::ptrdiff_t>(mid);
    std::nth_element(column.begin(), mid_it, column.end());
    if (n % 2 == 1) {
      out[j] = *mid_it;
    } else {
      const double upper = *mid_it;
      const double lower = *std::max_element(column.begin(), mid_it);
      out[j] = 0.5 * (lower + upper);
    }
  }
  return ParamVector(std::move(out));
}

ParamVector aggregate(const AggregatorConfig& cfg, std::span<const ParamVector> updates) {
  switch (cfg.rule) {
    case AggregationRule::FedAvg: return fedavg(updates);
    case AggregationRule::Krum: return krum(updates, cfg.byz_param).update;
    case AggregationRule::TrimmedMean: return trimmed_mean(updates, cfg.byz_param);
    case AggregationRule::Median: return median(updates);
  }
  throw InvalidArgument("aggregate: unknown rule");
}

}  // namespace fld
