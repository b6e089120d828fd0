// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "fldetect/linalg.hpp"

namespace fld {

enum class AggregationRule { FedAvg, Krum, TrimmedMean, Median };

std::string_view to_string(AggregationRule rule);
AggregationRule parse_aggregation_rule(std::string_view name);

struct AggregatorConfig {
  AggregationRule rule = AggregationRule::Median;
  /// Krum's assumed malicious count, Trimmed-Mean's per-side trim count.
  std::size_t byz_param = 0;
};

/// Throws InvalidArgument when the rule's size constraint fails for n clients.
void validate(const AggregatorConfig& cfg, std::size_t n);

ParamVector fedavg(std::span<const ParamVector> updates);

struct KrumChoice {
  ParamVector update;
  std::size_t index = 0;
};

/// Scores each candidate by the sum of squared distances to its n-k-2 nearest
/// neighbours and returns the minimiser; ties go to the lowest index.
KrumChoice krum(std::span<const ParamVector> updates, std::size_t k);

ParamVector trimmed_mean(std::span<const ParamVector> updates, std::size_t k);

/// Coordinate-wise median; the two central values are averaged for even n.
ParamVector median(std::span<const ParamVector> updates);

ParamVector aggregate(const AggregatorConfig& cfg, std::span<const ParamVector> updates);

}  // namespace fld
