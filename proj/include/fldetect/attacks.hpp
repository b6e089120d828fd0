// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Update crafting for malicious clients: sign flip, Scaling (backdoor),
// Distributed Backdoor, A-Little-Is-Enough, and the detector-aware adaptive
// variant that trades attack strength for update consistency.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fldetect/dataset.hpp"
#include "fldetect/hvp.hpp"
#include "fldetect/linalg.hpp"
#include "fldetect/model.hpp"

namespace fld {

enum class AttackKind { None, SignFlip, Scaling, DBA, ALIE, Adaptive };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view name);

/// True for attacks that plant a trigger (ASR is meaningful for them).
bool is_backdoor(AttackKind kind);

struct TriggerSpec {
  std::vector<std::size_t> feature_indices;
  std::vector<double> trigger_values;
  /// DBA split count; chunk i holds a contiguous slice of the indices.
  std::size_t parts = 4;

  /// [begin, end) into feature_indices for chunk `part`.
  std::pair<std::size_t, std::size_t> chunk(std::size_t part) const;
};

/// Last `size` features set to `value`.
TriggerSpec make_tail_trigger(std::size_t feature_dim, std::size_t size, double value,
                              std::size_t parts);

/// Throws InvalidArgument on duplicate / out-of-range indices or a size mismatch.
void validate(const TriggerSpec& spec, std::size_t feature_dim);

struct AttackConfig {
  AttackKind kind = AttackKind::None;
  double scale_factor = 1.0;
  TriggerSpec trigger;
  std::size_t target_label = 0;
  double alie_z = 1.0;
  double adaptive_lambda = 0.5;
  /// The attack whose crafted update anchors the adaptive objective.
  AttackKind adaptive_base = AttackKind::Scaling;
  std::size_t adaptive_steps = 50;
  double adaptive_step_size = 0.1;
};

/// Throws InvalidArgument when an invariant fails (recursive adaptive base,
/// lambda outside (0,1], target label out of range, bad trigger).
void validate(const AttackConfig& cfg, std::size_t num_classes, std::size_t feature_dim);

ParamVector sign_flip(const ParamVector& true_update);

/// Copy of x with the trigger written in; only chunk `part` when given.
std::vector<double> embed_trigger(std::span<const double> x, const TriggerSpec& spec,
                                  std::optional<std::size_t> part = std::nullopt);

/// The shard plus one trigger-embedded copy of every example, relabelled to
/// `target`.
Dataset backdoor_dataset(const Dataset& shard, const TriggerSpec& trigger, std::size_t target,
                         std::optional<std::size_t> part = std::nullopt);

/// gamma * gradient on the backdoor-augmented shard.
ParamVector scaling_attack(const ModelSpec& spec, const Dataset& shard, const ParamVector& w,
                           const AttackConfig& cfg);

/// Scaling attack restricted to the client's trigger chunk.
ParamVector dba_attack(const ModelSpec& spec, const Dataset& shard, const ParamVector& w,
                       const AttackConfig& cfg, std::size_t group);

/// Clamps `raw` into [mu - z sigma, mu + z sigma] coordinate-wise, where mu and
/// sigma (population) are taken over the cohort. Needs at least two updates.
ParamVector alie_attack(std::span<const ParamVector> cohort, const ParamVector& raw, double z);

/// lambda * |g - base|^2 + (1 - lambda) * |g - predicted|
double adaptive_objective(const ParamVector& g, const ParamVector& base,
                          const ParamVector& predicted, double lambda);

/// Minimises adaptive_objective starting from `base` with proximal gradient
/// steps (gradient on the smooth anchor term, exact prox on the distance
/// term). lambda == 1 returns `base` unchanged.
ParamVector adaptive_attack(const ParamVector& base, const ParamVector& predicted,
                            const AttackConfig& cfg);

/// Per-client state for the adaptive attack: the client mirrors the server's
/// prediction using its own L-BFGS window over (global-model difference,
/// own true-gradient difference) pairs.
class AdaptiveAttacker {
 public:
  AdaptiveAttacker(std::size_t window, std::size_t dim);

  /// `true_update` is the client's honest gradient at `w`; `base` the base
  /// attack's update. Returns the update to send and advances the state.
  ParamVector craft(const ParamVector& base, const ParamVector& true_update, const ParamVector& w,
                    const AttackConfig& cfg);

  /// The client's estimate of what the server predicts for it at `w`.
  std::optional<ParamVector> predicted_update(const ParamVector& w) const;

 private:
  HistoryWindow window_;
  std::optional<ParamVector> prev_w_;
  std::optional<ParamVector> prev_true_;
  std::optional<ParamVector> prev_sent_;
};

}  // namespace fld
