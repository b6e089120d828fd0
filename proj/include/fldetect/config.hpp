// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration: a sectioned `key = value` text file.
//
//   seed = 1
//   [federation]  clients malicious rounds learning_rate max_restarts eval_every
//   [data]        source csv_path classes features examples_per_client degree
//                 test_fraction
//   [model]       kind hidden
//   [aggregator]  rule byz_param
//   [attack]      kind scale_factor target_label alie_z trigger_size
//                 trigger_value dba_parts adaptive_lambda adaptive_base
//                 adaptive_steps adaptive_step_size
//   [detector]    enabled variant window start_iteration max_clusters
//                 gap_samples
//   [output]      dir
//
// `#` starts a comment. Unknown sections or keys are errors; missing keys take
// the defaults below. `byz_param = auto` tracks the malicious count and
// `trigger_value = auto` uses the 99th percentile of |feature| in the
// training data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "fldetect/aggregation.hpp"
#include "fldetect/attacks.hpp"
#include "fldetect/detector.hpp"
#include "fldetect/model.hpp"

namespace fld {

enum class DataSource { Synthetic, Csv };

struct ExperimentConfig {
  std::uint64_t seed = 1;

  struct Federation {
    std::size_t clients = 100;
    std::size_t malicious = 28;
    std::size_t rounds = 500;
    double learning_rate = 1e-3;
    std::size_t max_restarts = 3;
    std::size_t eval_every = 0;  // 0 disables TACC snapshots
    bool operator==(const Federation&) const = default;
  } federation;

  struct Data {
    DataSource source = DataSource::Synthetic;
    std::string csv_path;
    std::size_t classes = 10;
    std::size_t features = 32;
    std::size_t examples_per_client = 50;
    double degree = 0.5;
    double test_fraction = 0.2;
    bool operator==(const Data&) const = default;
  } data;

  struct ModelSection {
    ModelKind kind = ModelKind::Logistic;
    std::size_t hidden = 16;
    bool operator==(const ModelSection&) const = default;
  } model;

  struct Aggregator {
    AggregationRule rule = AggregationRule::Median;
    std::optional<std::size_t> byz_param;  // nullopt: same as malicious
    bool operator==(const Aggregator&) const = default;
  } aggregator;

  struct Attack {
    AttackKind kind = AttackKind::SignFlip;
    double scale_factor = 1.0;
    std::size_t target_label = 0;
    double alie_z = 1.0;
    std::size_t trigger_size = 4;
    std::optional<double> trigger_value;  // nullopt: 99th percentile magnitude
    std::size_t dba_parts = 4;
    double adaptive_lambda = 0.5;
    AttackKind adaptive_base = AttackKind::Scaling;
    std::size_t adaptive_steps = 50;
    double adaptive_step_size = 0.1;
    bool operator==(const Attack&) const = default;
  } attack;

  struct DetectorSection {
    bool enabled = true;
    DetectorVariant variant = DetectorVariant::FLDetector;
    std::size_t window = 10;
    std::size_t start_iteration = 50;
    std::size_t max_clusters = 10;
    std::size_t gap_samples = 20;
    bool operator==(const DetectorSection&) const = default;
  } detector;

  struct Output {
    std::string dir = "out";
    bool operator==(const Output&) const = default;
  } output;

  std::size_t effective_byz_param() const {
    return aggregator.byz_param.value_or(federation.malicious);
  }

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses configuration text. Throws ConfigError ("line N: ...") on syntax
/// errors, unknown keys, or bad values, and on failed cross-field validation.
ExperimentConfig parse_config(std::string_view text);

/// Reads and parses a file (see parse_config).
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-field checks; throws ConfigError naming the failing constraint.
void validate_config(const ExperimentConfig& cfg);

/// Full config text with every key, loadable by parse_config.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace fld
