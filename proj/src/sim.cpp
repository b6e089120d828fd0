// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "fldetect/aggregation.hpp"
#include "fldetect/errors.hpp"
#include "fldetect/rng.hpp"

namespace fld {
namespace {

// Seed stream tags.
enum : std::uint64_t {
  kTagData = 1,
  kTagTestSplit = 2,
  kTagShards = 3,
  kTagRoles = 4,
  kTagModel = 5,
  kTagGap = 6,
};

AttackKind base_kind(const AttackConfig& a) {
  return a.kind == AttackKind::Adaptive ? a.adaptive_base : a.kind;
}

// Largest usable byz_param for the rule with `n` active clients.
std::size_t clamp_byz(AggregationRule rule, std::size_t k, std::size_t n) {
  switch (rule) {
    case AggregationRule::Krum:
      if (n < 3) throw Error("krum needs at least 3 active clients, have " + std::to_string(n));
      return std::min(k, n - 3);
    case AggregationRule::TrimmedMean:
      return std::min(k, (n - 1) / 2);
    default:
      return k;
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::size_t worker_threads() {
  if (const char* env = std::getenv("FLSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t threads = std::min(worker_threads(), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        // Keep the lowest failing index so the reported error is stable.
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

World build_world(const ExperimentConfig& cfg) {
  validate_config(cfg);
  World world;
  world.cfg = cfg;
  const auto& fed = cfg.federation;
  const auto& dc = cfg.data;

  Dataset data;
  if (dc.source == DataSource::Synthetic) {
    const double total = static_cast<double>(fed.clients * dc.examples_per_client) /
                         (1.0 - dc.test_fraction);
    const auto per_class =
        static_cast<std::size_t>(std::ceil(total / static_cast<double>(dc.classes)));
    data = generate_synthetic(dc.classes, dc.features, per_class,
                              derive_seed(cfg.seed, {kTagData}));
  } else {
    try {
      data = load_csv_dataset(dc.csv_path);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("data.csv_path: ") + e.what());
    }
    const std::size_t C = data.num_classes();
    if (C < 2) throw ConfigError("invalid config: csv data needs at least 2 classes");
    if (fed.clients < C) throw ConfigError("invalid config: federation.clients >= csv classes");
    if (dc.degree < 1.0 / static_cast<double>(C) - 1e-12 || dc.degree > 1.0)
      throw ConfigError("invalid config: data.degree in [1/classes, 1]");
    if (cfg.attack.trigger_size > data.feature_dim())
      throw ConfigError("invalid config: attack.trigger_size <= csv features");
    if (cfg.attack.target_label >= C)
      throw ConfigError("invalid config: attack.target_label < csv classes");
  }

  auto split = train_test_split(data, dc.test_fraction, derive_seed(cfg.seed, {kTagTestSplit}));
  if (split.test.empty() || split.train.empty())
    throw ConfigError("invalid config: train/test split leaves an empty side");
  world.train = std::move(split.train);
  world.test = std::move(split.test);

  world.spec.kind = cfg.model.kind;
  world.spec.features = world.train.feature_dim();
  world.spec.classes = world.train.num_classes();
  world.spec.hidden = cfg.model.kind == ModelKind::MLP ? cfg.model.hidden : 0;

  auto shards =
      split_noniid(world.train, fed.clients, dc.degree, derive_seed(cfg.seed, {kTagShards}));

  std::vector<ClientId> ids(fed.clients);
  std::iota(ids.begin(), ids.end(), ClientId{0});
  Rng rng(derive_seed(cfg.seed, {kTagRoles}));
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[uniform_index(rng, i)]);
  // Without an attack nobody deviates from the protocol, so nobody is malicious.
  const std::size_t m = cfg.attack.kind == AttackKind::None ? 0 : fed.malicious;
  world.truth.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m));

  world.clients.resize(fed.clients);
  std::size_t rank = 0;
  for (ClientId id = 0; id < fed.clients; ++id) {
    auto& c = world.clients[id];
    c.id = id;
    c.shard = std::move(shards[id]);
    if (c.shard.empty())
      throw ConfigError("invalid config: client " + std::to_string(id) +
                        " received no training examples");
    if (world.truth.count(id)) {
      c.role = Role::Malicious;
      c.group = rank++ % cfg.attack.dba_parts;
    }
  }

  const auto& ac = cfg.attack;
  world.attack.kind = ac.kind;
  world.attack.scale_factor = ac.scale_factor;
  world.attack.target_label = ac.target_label;
  world.attack.alie_z = ac.alie_z;
  world.attack.adaptive_lambda = ac.adaptive_lambda;
  world.attack.adaptive_base = ac.adaptive_base;
  world.attack.adaptive_steps = ac.adaptive_steps;
  world.attack.adaptive_step_size = ac.adaptive_step_size;
  const double value = ac.trigger_value ? *ac.trigger_value
                                        : feature_magnitude_quantile(world.train, 0.99);
  world.attack.trigger =
      make_tail_trigger(world.spec.features, ac.trigger_size, value, ac.dba_parts);
  try {
    validate(world.attack, world.spec.classes, world.spec.features);
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }

  world.l_smooth = logistic_smoothness_bound(world.train);
  return world;
}

Segment start_segment(const World& world, std::size_t index, std::vector<ClientId> active,
                      bool detection) {
  const auto& cfg = world.cfg;
  Segment seg;
  seg.index = index;
  std::sort(active.begin(), active.end());
  seg.active = std::move(active);
  seg.w = init_model(world.spec, derive_seed(cfg.seed, {kTagModel, index})).params;
  if (detection) {
    DetectorConfig dc;
    dc.variant = cfg.detector.variant;
    dc.window = cfg.detector.window;
    dc.start_iteration = cfg.detector.start_iteration;
    dc.gap_max_clusters = cfg.detector.max_clusters;
    dc.gap_samples = cfg.detector.gap_samples;
    dc.rng_seed = derive_seed(cfg.seed, {kTagGap, index});
    seg.detector.emplace(dc, seg.w.dim());
  }
  if (world.attack.kind == AttackKind::Adaptive) {
    for (ClientId id : seg.active)
      if (world.clients[id].role == Role::Malicious)
        seg.adaptive.emplace(id, AdaptiveAttacker(cfg.detector.window, seg.w.dim()));
  }
  return seg;
}

RoundResult run_round(const World& world, Segment& seg) {
  const auto& cfg = world.cfg;
  const auto& attack = world.attack;
  const std::size_t t = seg.t + 1;
  const std::size_t na = seg.active.size();
  if (na == 0) throw Error("run_round: no active clients");

  const AttackKind kind = base_kind(attack);
  AttackConfig poison = attack;  // backdoor updates feeding ALIE are unscaled
  if (kind == AttackKind::ALIE) poison.scale_factor = 1.0;

  std::vector<LossGradient> honest(na);
  std::vector<ParamVector> crafted(na);
  parallel_for(na, [&](std::size_t i) {
    const auto& client = world.clients[seg.active[i]];
    honest[i] = loss_and_gradient(world.spec, seg.w, client.shard);
    if (client.role != Role::Malicious) return;
    switch (kind) {
      case AttackKind::None:
      case AttackKind::Adaptive:
        crafted[i] = honest[i].gradient;
        break;
      case AttackKind::SignFlip:
        crafted[i] = sign_flip(honest[i].gradient);
        break;
      case AttackKind::Scaling:
      case AttackKind::ALIE:
        crafted[i] = scaling_attack(world.spec, client.shard, seg.w, poison);
        break;
      case AttackKind::DBA:
        crafted[i] = dba_attack(world.spec, client.shard, seg.w, poison, client.group);
        break;
    }
  });

  std::vector<std::size_t> mal;
  for (std::size_t i = 0; i < na; ++i)
    if (world.clients[seg.active[i]].role == Role::Malicious) mal.push_back(i);

  if (kind == AttackKind::ALIE && mal.size() >= 2) {
    std::vector<ParamVector> cohort;
    cohort.reserve(mal.size());
    for (std::size_t i : mal) cohort.push_back(crafted[i]);
    for (std::size_t i : mal) crafted[i] = alie_attack(cohort, crafted[i], attack.alie_z);
  }
  if (attack.kind == AttackKind::Adaptive) {
    for (std::size_t i : mal)
      crafted[i] = seg.adaptive.at(seg.active[i]).craft(crafted[i], honest[i].gradient, seg.w,
                                                         attack);
  }

  RoundResult out;
  std::vector<ParamVector> ordered;
  ordered.reserve(na);
  double loss = 0.0;
  double weight = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    const auto& client = world.clients[seg.active[i]];
    const double sz = static_cast<double>(client.shard.size());
    loss += honest[i].loss * sz;
    weight += sz;
    ParamVector u = client.role == Role::Malicious ? std::move(crafted[i])
                                                   : std::move(honest[i].gradient);
    ordered.push_back(u);
    out.updates.emplace(client.id, std::move(u));
  }

  AggregatorConfig agg;
  agg.rule = cfg.aggregator.rule;
  agg.byz_param = clamp_byz(agg.rule, cfg.effective_byz_param(), na);
  out.global_update = aggregate(agg, ordered);

  auto& rec = out.record;
  rec.iteration = t;
  rec.restart_segment = seg.index;
  rec.global_loss = loss / weight;
  rec.mean_score_benign = std::numeric_limits<double>::quiet_NaN();
  rec.mean_score_malicious = std::numeric_limits<double>::quiet_NaN();

  if (seg.detector) {
    out.outcome = seg.detector->detect(out.updates, out.global_update, seg.w, seg.w_prev, t);
    const auto& o = *out.outcome;
    if (!o.scores.empty()) {
      std::vector<double> benign;
      std::vector<double> malicious;
      for (const auto& [id, s] : o.scores)
        (world.clients[id].role == Role::Malicious ? malicious : benign).push_back(s);
      rec.mean_score_benign = mean_of(benign);
      rec.mean_score_malicious = mean_of(malicious);
    }
    rec.selected_k = o.selected_k;
    rec.flagged_count = o.flagged.size();
    rec.fallback_used = o.fallback_used;
  }

  seg.w_prev = seg.w;
  seg.w.axpy(-cfg.federation.learning_rate, out.global_update);
  if (!seg.w.all_finite()) throw NonFiniteValue("global model diverged at iteration " +
                                                std::to_string(t));
  seg.t = t;

  if (cfg.federation.eval_every > 0 && t % cfg.federation.eval_every == 0)
    rec.tacc_snapshot = accuracy(world.spec, seg.w, world.test);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(const RoundResult&)>& on_round) {
  const World world = build_world(cfg);
  ExperimentResult result;
  result.truth = world.truth;
  result.l_smooth = world.l_smooth;
  result.trigger_value =
      world.attack.trigger.trigger_values.empty() ? 0.0 : world.attack.trigger.trigger_values[0];

  std::vector<ClientId> active(cfg.federation.clients);
  std::iota(active.begin(), active.end(), ClientId{0});
  std::size_t restarts = 0;
  Segment seg = start_segment(world, 0, active, cfg.detector.enabled);

  while (seg.t < cfg.federation.rounds) {
    RoundResult r = run_round(world, seg);
    result.records.push_back(r.record);
    if (on_round) on_round(r);
    if (!r.outcome || r.outcome->flagged.empty()) continue;

    DetectionEvent ev;
    ev.segment = seg.index;
    ev.iteration = r.record.iteration;
    ev.flagged = r.outcome->flagged;
    result.flagged.insert(ev.flagged.begin(), ev.flagged.end());
    std::erase_if(active, [&](ClientId id) { return ev.flagged.count(id) > 0; });

    if (restarts < cfg.federation.max_restarts) {
      ++restarts;
      ev.restarted = true;
      seg = start_segment(world, restarts, active, true);
    } else {
      // Out of restarts: drop the flagged clients and keep training without
      // further detection.
      seg.active = active;
      seg.detector.reset();
      for (ClientId id : ev.flagged) seg.adaptive.erase(id);
    }
    result.events.push_back(std::move(ev));
  }

  const auto dm = detection_metrics(result.truth, result.flagged, cfg.federation.clients);
  result.metrics.dacc = dm.dacc;
  result.metrics.fpr = dm.fpr;
  result.metrics.fnr = dm.fnr;
  result.metrics.tacc = accuracy(world.spec, seg.w, world.test);
  result.metrics.asr =
      compute_asr(world.spec, seg.w, world.test, world.attack.trigger, world.attack.target_label);
  result.final_model = seg.w;
  return result;
}

}  // namespace fld
