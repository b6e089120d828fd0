// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "fldetect/errors.hpp"

namespace fld {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::SignFlip: return "sign_flip";
    case AttackKind::Scaling: return "scaling";
    case AttackKind::DBA: return "dba";
    case AttackKind::ALIE: return "alie";
    case AttackKind::Adaptive: return "adaptive";
  }
  return "?";
}

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "none") return AttackKind::None;
  if (name == "sign_flip" || name == "signflip") return AttackKind::SignFlip;
  if (name == "scaling") return AttackKind::Scaling;
  if (name == "dba") return AttackKind::DBA;
  if (name == "alie") return AttackKind::ALIE;
  if (name == "adaptive") return AttackKind::Adaptive;
  throw InvalidArgument("unknown attack kind '" + std::string(name) + "'");
}

bool is_backdoor(AttackKind kind) {
  return kind == AttackKind::Scaling || kind == AttackKind::DBA || kind == AttackKind::ALIE ||
         kind == AttackKind::Adaptive;
}

std::pair<std::size_t, std::size_t> TriggerSpec::chunk(std::size_t part) const {
  if (part >= parts) {
    throw InvalidArgument("trigger chunk " + std::to_string(part) + " out of " +
                          std::to_string(parts));
  }
  const std::size_t k = feature_indices.size();
  return {part * k / parts, (part + 1) * k / parts};
}

TriggerSpec make_tail_trigger(std::size_t feature_dim, std::size_t size, double value,
                              std::size_t parts) {
  if (size > feature_dim) throw InvalidArgument("trigger larger than feature dimension");
  TriggerSpec t;
  for (std::size_t j = feature_dim - size; j < feature_dim; ++j) t.feature_indices.push_back(j);
  t.trigger_values.assign(size, value);
  t.parts = parts;
  return t;
}

void validate(const TriggerSpec& spec, std::size_t feature_dim) {
  if (spec.feature_indices.size() != spec.trigger_values.size()) {
    throw InvalidArgument("trigger: indices and values differ in length");
  }
  if (spec.parts == 0) throw InvalidArgument("trigger: parts must be positive");
  if (!spec.feature_indices.empty() && spec.parts > spec.feature_indices.size()) {
    throw InvalidArgument("trigger: more parts than trigger indices");
  }
  std::set<std::size_t> seen;
  for (std::size_t idx : spec.feature_indices) {
    if (idx >= feature_dim) throw InvalidArgument("trigger: index out of range");
    if (!seen.insert(idx).second) throw InvalidArgument("trigger: duplicate index");
  }
  for (double v : spec.trigger_values) {
    if (!std::isfinite(v)) throw InvalidArgument("trigger: non-finite value");
  }
}

void validate(const AttackConfig& cfg, std::size_t num_classes, std::size_t feature_dim) {
  if (cfg.adaptive_base == AttackKind::Adaptive) {
    throw InvalidArgument("adaptive attack cannot use itself as base");
  }
  if (cfg.target_label >= num_classes) throw InvalidArgument("target_label out of range");
  if (!(cfg.scale_factor >= 0.0)) throw InvalidArgument("scale_factor must be >= 0");
  if (!(cfg.alie_z >= 0.0)) throw InvalidArgument("alie_z must be >= 0");
  if (!(cfg.adaptive_lambda > 0.0 && cfg.adaptive_lambda <= 1.0)) {
    throw InvalidArgument("adaptive_lambda must lie in (0, 1]");
  }
  if (cfg.adaptive_steps == 0) throw InvalidArgument("adaptive_steps must be positive");
  if (!(cfg.adaptive_step_size > 0.0)) throw InvalidArgument("adaptive_step_size must be > 0");
  validate(cfg.trigger, feature_dim);
}

ParamVector sign_flip(const ParamVector& true_update) { return -true_update; }

std::vector<double> embed_trigger(std::span<const double> x, const TriggerSpec& spec,
                                  std::optional<std::size_t> part) {
  std::vector<double> out(x.begin(), x.end());
  std::size_t begin = 0;
  std::size_t end = spec.feature_indices.size();
  if (part) std::tie(begin, end) = spec.chunk(*part);
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t idx = spec.feature_indices[i];
    if (idx >= out.size()) throw InvalidArgument("embed_trigger: index out of range");
    out[idx] = spec.trigger_values[i];
  }
  return out;
}

Dataset backdoor_dataset(const Dataset& shard, const TriggerSpec& trigger, std::size_t target,
                         std::optional<std::size_t> part) {
  Dataset out(shard.num_classes(), shard.feature_dim());
  out.reserve(2 * shard.size());
  for (std::size_t i = 0; i < shard.size(); ++i) out.add(shard.features(i), shard.label(i));
  for (std::size_t i = 0; i < shard.size(); ++i) {
    out.add(embed_trigger(shard.features(i), trigger, part), target);
  }
  return out;
}

ParamVector scaling_attack(const ModelSpec& spec, const Dataset& shard, const ParamVector& w,
                           const AttackConfig& cfg) {
  const Dataset poisoned = backdoor_dataset(shard, cfg.trigger, cfg.target_label);
  return cfg.scale_factor * local_update(spec, poisoned, w);
}

ParamVector dba_attack(const ModelSpec& spec, const Dataset& shard, const ParamVector& w,
                       const AttackConfig& cfg, std::size_t group) {
  if (group >= cfg.trigger.parts) {
    throw InvalidArgument("dba_attack: group " + std::to_string(group) + " >= parts");
  }
  const Dataset poisoned = backdoor_dataset(shard, cfg.trigger, cfg.target_label, group);
  return cfg.scale_factor * local_update(spec, poisoned, w);
}

ParamVector alie_attack(std::span<const ParamVector> cohort, const ParamVector& raw, double z) {
  if (cohort.size() < 2) throw InvalidArgument("alie_attack: cohort needs at least two updates");
  const std::size_t p = raw.dim();
  const double inv = 1.0 / static_cast<double>(cohort.size());
  std::vector<double> out(p);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (const auto& u : cohort) {
      if (u.dim() != p) throw DimensionError("alie_attack: cohort dimension mismatch");
      mean += u[j];
    }
    mean *= inv;
    double var = 0.0;
    for (const auto& u : cohort) var += (u[j] - mean) * (u[j] - mean);
    const double sd = std::sqrt(var * inv);
    out[j] = std::clamp(raw[j], mean - z * sd, mean + z * sd);
  }
  return ParamVector(std::move(out));
}

double adaptive_objective(const ParamVector& g, const ParamVector& base,
                          const ParamVector& predicted, double lambda) {
  return lambda * squared_distance(g, base) + (1.0 - lambda) * l2_distance(g, predicted);
}

ParamVector adaptive_attack(const ParamVector& base, const ParamVector& predicted,
                            const AttackConfig& cfg) {
  const double lambda = cfg.adaptive_lambda;
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidArgument("adaptive_lambda must lie in (0, 1]");
  if (base.dim() != predicted.dim()) throw DimensionError("adaptive_attack: dimension mismatch");
  if (lambda == 1.0) return base;

  const double step = cfg.adaptive_step_size;
  const double radius = step * (1.0 - lambda);
  ParamVector g = base;
  for (std::size_t it = 0; it < cfg.adaptive_steps; ++it) {
    // Gradient step on lambda * |g - base|^2.
    ParamVector y = g;
    y.axpy(-2.0 * step * lambda, g - base);
    // Prox of radius * |. - predicted|: shrink toward the prediction.
    ParamVector r = y - predicted;
    const double len = l2_norm(r);
    const double shrink = len > radius ? 1.0 - radius / len : 0.0;
    g = predicted;
    g.axpy(shrink, r);
  }
  return g;
}

AdaptiveAttacker::AdaptiveAttacker(std::size_t window, std::size_t dim) : window_(window, dim) {}

std::optional<ParamVector> AdaptiveAttacker::predicted_update(const ParamVector& w) const {
  if (!prev_sent_) return std::nullopt;
  if (window_.empty()) return *prev_sent_;
  try {
    return *prev_sent_ + hessian_vector_product(window_, w - *prev_w_);
  } catch (const NotPositiveDefinite&) {
    return *prev_sent_;
  }
}

ParamVector AdaptiveAttacker::craft(const ParamVector& base, const ParamVector& true_update,
                                    const ParamVector& w, const AttackConfig& cfg) {
  const auto predicted = predicted_update(w);
  ParamVector sent = predicted ? adaptive_attack(base, *predicted, cfg) : base;

  if (prev_w_) window_.push_pair(w - *prev_w_, true_update - *prev_true_);
  prev_w_ = w;
  prev_true_ = true_update;
  prev_sent_ = sent;
  return sent;
}

}  // namespace fld
