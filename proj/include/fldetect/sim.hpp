// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Federated training driver: world construction, the round loop, and
// restart-on-detection.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fldetect/attacks.hpp"
#include "fldetect/config.hpp"
#include "fldetect/dataset.hpp"
#include "fldetect/detector.hpp"
#include "fldetect/metrics.hpp"
#include "fldetect/model.hpp"

namespace fld {

enum class Role { Benign, Malicious };

struct ClientRecord {
  ClientId id = 0;
  Dataset shard;
  Role role = Role::Benign;
  std::size_t group = 0;  // DBA trigger chunk
};

struct World {
  ExperimentConfig cfg;
  ModelSpec spec;
  Dataset train;
  Dataset test;
  std::vector<ClientRecord> clients;
  AttackConfig attack;  // resolved trigger included
  std::set<ClientId> truth;
  double l_smooth = 0.0;  // logistic smoothness bound of the training data
};

/// Generates (or loads) data, splits it, assigns roles and DBA groups.
/// Throws ConfigError when the data cannot satisfy the config.
World build_world(const ExperimentConfig& cfg);

/// One training segment: the span between (re)starts.
struct Segment {
  std::size_t index = 0;
  std::vector<ClientId> active;  // sorted
  ParamVector w;
  std::optional<ParamVector> w_prev;
  std::optional<Detector> detector;
  std::map<ClientId, AdaptiveAttacker> adaptive;
  std::size_t t = 0;  // rounds completed in this segment
};

Segment start_segment(const World& world, std::size_t index, std::vector<ClientId> active,
                      bool detection);

struct RoundResult {
  RoundRecord record;
  std::optional<DetectionOutcome> outcome;
  UpdateMap updates;
  ParamVector global_update;
};

/// Runs round `seg.t + 1`: client updates, aggregation, detection, and the
/// model step w <- w - alpha * g.
RoundResult run_round(const World& world, Segment& seg);

struct DetectionEvent {
  std::size_t segment = 0;
  std::size_t iteration = 0;
  std::set<ClientId> flagged;
  bool restarted = false;
};

struct ExperimentResult {
  Metrics metrics;
  std::vector<RoundRecord> records;
  std::vector<DetectionEvent> events;
  std::set<ClientId> flagged;  // every client removed over the run
  std::set<ClientId> truth;
  double l_smooth = 0.0;
  double trigger_value = 0.0;
  ParamVector final_model;

  std::optional<std::size_t> first_detection() const {
    if (events.empty()) return std::nullopt;
    return events.front().iteration;
  }
};

/// Runs the full budget with restarts and computes the final metrics.
/// `on_round` (optional) sees every round as it finishes.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(const RoundResult&)>& on_round = {});

/// Worker count from FLSIM_THREADS (default: hardware concurrency, >= 1).
std::size_t worker_threads();

/// Runs body(i) for i in [0, count) on up to worker_threads() threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fld
