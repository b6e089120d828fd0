// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <numeric>
#include <set>

#include "fldetect/errors.hpp"
#include "fldetect/runner.hpp"
#include "fldetect/sim.hpp"

using namespace fld;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.seed = 5;
  c.federation.clients = 20;
  c.federation.malicious = 5;
  c.federation.rounds = 40;
  c.federation.learning_rate = 0.01;
  c.data.classes = 4;
  c.data.features = 8;
  c.data.examples_per_client = 30;
  c.data.degree = 0.5;
  c.detector.start_iteration = 15;
  return c;
}

double unweighted_loss(const World& world, const Segment& seg) {
  double s = 0.0;
  for (ClientId id : seg.active) s += mean_loss(world.spec, seg.w, world.clients[id].shard);
  return s / static_cast<double>(seg.active.size());
}

}  // namespace

TEST_CASE("world construction") {
  const auto cfg = small_config();
  const World world = build_world(cfg);
  CHECK(world.clients.size() == 20);
  CHECK(world.truth.size() == 5);
  std::size_t total = 0;
  std::size_t mal = 0;
  for (const auto& c : world.clients) {
    total += c.shard.size();
    mal += c.role == Role::Malicious;
    CHECK(world.truth.count(c.id) == (c.role == Role::Malicious));
  }
  CHECK(mal == 5);
  CHECK(total == world.train.size());
  CHECK(world.test.size() > 0);
  CHECK(world.l_smooth > 0.0);
  // Default trigger: last 4 features at the 99th-percentile magnitude.
  CHECK(world.attack.trigger.feature_indices == std::vector<std::size_t>{4, 5, 6, 7});
  CHECK(world.attack.trigger.trigger_values[0] == feature_magnitude_quantile(world.train, 0.99));
}

TEST_CASE("dba groups cover every part") {
  auto cfg = small_config();
  cfg.attack.kind = AttackKind::DBA;
  const World world = build_world(cfg);
  std::set<std::size_t> groups;
  for (const auto& c : world.clients)
    if (c.role == Role::Malicious) groups.insert(c.group);
  CHECK(groups == std::set<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("fedavg descent on the averaged objective") {
  auto cfg = small_config();
  cfg.federation.malicious = 0;
  cfg.aggregator.rule = AggregationRule::FedAvg;
  cfg.detector.enabled = false;
  const World world = build_world(cfg);
  double l = 0.0;
  for (const auto& c : world.clients) l = std::max(l, logistic_smoothness_bound(c.shard));
  auto run_cfg = world.cfg;
  run_cfg.federation.learning_rate = 1.9 / l;
  World fast = world;
  fast.cfg = run_cfg;

  std::vector<ClientId> ids(20);
  std::iota(ids.begin(), ids.end(), ClientId{0});
  Segment seg = start_segment(fast, 0, ids, false);
  double prev = unweighted_loss(fast, seg);
  for (int t = 0; t < 30; ++t) {
    run_round(fast, seg);
    const double now = unweighted_loss(fast, seg);
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("zero attackers match the no-attack run") {
  auto a = small_config();
  a.federation.malicious = 0;
  a.attack.kind = AttackKind::SignFlip;
  auto b = a;
  b.attack.kind = AttackKind::None;
  const auto ra = run_experiment(a);
  const auto rb = run_experiment(b);
  CHECK(trace_csv(ra.records) == trace_csv(rb.records));
  CHECK(ra.final_model == rb.final_model);
}

TEST_CASE("sign flip slows training under fedavg") {
  auto attack = small_config();
  attack.aggregator.rule = AggregationRule::FedAvg;
  attack.detector.enabled = false;
  attack.attack.kind = AttackKind::SignFlip;
  auto clean = attack;
  clean.attack.kind = AttackKind::None;
  const auto ra = run_experiment(attack);
  const auto rc = run_experiment(clean);
  CHECK(ra.records.back().global_loss > rc.records.back().global_loss);
  // Same roles, so the losses start from the same point.
  CHECK(ra.records.front().global_loss == rc.records.front().global_loss);
}

TEST_CASE("restart clears detector state") {
  auto cfg = small_config();
  cfg.attack.kind = AttackKind::SignFlip;
  cfg.aggregator.rule = AggregationRule::Median;
  const auto r = run_experiment(cfg);
  REQUIRE_FALSE(r.events.empty());
  CHECK(r.events.front().restarted);
  CHECK(r.events.front().flagged == r.truth);

  // The round after the detection starts a new segment at iteration 1.
  std::size_t idx = 0;
  while (r.records[idx].restart_segment == 0) ++idx;
  CHECK(r.records[idx].iteration == 1);
  CHECK(r.records[idx - 1].iteration == r.events.front().iteration);
  for (std::size_t i = 1; i < r.records.size(); ++i)
    if (r.records[i].restart_segment == r.records[i - 1].restart_segment)
      CHECK(r.records[i].iteration == r.records[i - 1].iteration + 1);

  // A restarted segment holds a fresh detector.
  const World world = build_world(cfg);
  std::vector<ClientId> survivors;
  for (ClientId i = 0; i < 20; ++i)
    if (!r.truth.count(i)) survivors.push_back(i);
  const Segment seg = start_segment(world, 1, survivors, true);
  REQUIRE(seg.detector.has_value());
  CHECK(seg.detector->config().window == cfg.detector.window);
  CHECK(*seg.detector == Detector(seg.detector->config(), seg.w.dim()));
  CHECK(r.metrics.dacc == 1.0);
  CHECK(r.metrics.fpr == 0.0);
  CHECK(r.metrics.fnr == 0.0);
}

TEST_CASE("no detection classifies everyone benign") {
  auto cfg = small_config();
  cfg.detector.enabled = false;
  cfg.attack.kind = AttackKind::SignFlip;
  const auto r = run_experiment(cfg);
  CHECK(r.events.empty());
  CHECK(r.metrics.dacc == doctest::Approx(15.0 / 20.0));
  CHECK(r.metrics.fnr == 1.0);
}

TEST_CASE("restart budget is bounded") {
  auto cfg = small_config();
  cfg.attack.kind = AttackKind::SignFlip;
  cfg.federation.max_restarts = 0;
  const auto r = run_experiment(cfg);
  REQUIRE_FALSE(r.events.empty());
  CHECK_FALSE(r.events.front().restarted);
  CHECK(r.events.size() == 1);
  CHECK(r.records.size() == cfg.federation.rounds);
}

TEST_CASE("every attack kind runs") {
  for (auto kind : {AttackKind::None, AttackKind::SignFlip, AttackKind::Scaling, AttackKind::DBA,
                    AttackKind::ALIE, AttackKind::Adaptive}) {
    for (auto rule : {AggregationRule::FedAvg, AggregationRule::Krum,
                      AggregationRule::TrimmedMean, AggregationRule::Median}) {
      auto cfg = small_config();
      cfg.federation.rounds = 20;
      cfg.attack.kind = kind;
      cfg.aggregator.rule = rule;
      const auto r = run_experiment(cfg);
      CHECK(r.records.size() >= 20);
      CHECK(r.metrics.tacc >= 0.0);
    }
  }
}

TEST_CASE("mlp model runs") {
  auto cfg = small_config();
  cfg.model.kind = ModelKind::MLP;
  cfg.model.hidden = 6;
  const auto r = run_experiment(cfg);
  CHECK(r.final_model.dim() == 6 * 8 + 6 + 4 * 6 + 4);
}

TEST_CASE("results do not depend on the thread count") {
  auto cfg = small_config();
  cfg.attack.kind = AttackKind::ALIE;
  setenv("FLSIM_THREADS", "1", 1);
  CHECK(worker_threads() == 1);
  const auto a = run_experiment(cfg);
  setenv("FLSIM_THREADS", "4", 1);
  CHECK(worker_threads() == 4);
  const auto b = run_experiment(cfg);
  unsetenv("FLSIM_THREADS");
  CHECK(trace_csv(a.records) == trace_csv(b.records));
  CHECK(summary_json(cfg, a) == summary_json(cfg, b));
}

TEST_CASE("parallel for reports the lowest failing index") {
  setenv("FLSIM_THREADS", "3", 1);
  try {
    parallel_for(50, [](std::size_t i) {
      if (i % 7 == 3) throw InvalidArgument("fail " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()) == "fail 3");
  }
  unsetenv("FLSIM_THREADS");
}

TEST_CASE("tacc snapshots") {
  auto cfg = small_config();
  cfg.federation.eval_every = 10;
  cfg.detector.enabled = false;
  const auto r = run_experiment(cfg);
  for (const auto& rec : r.records) CHECK(rec.tacc_snapshot.has_value() == (rec.iteration % 10 == 0));
}
