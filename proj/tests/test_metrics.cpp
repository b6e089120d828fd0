// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fldetect/errors.hpp"
#include "fldetect/metrics.hpp"
#include "fldetect/rng.hpp"
#include "oracles.hpp"

using namespace fld;

namespace {

ParamVector constant_model(const ModelSpec& spec, std::size_t cls) {
  auto w = ParamVector::zeros(spec.param_count());
  w[spec.classes * spec.features + cls] = 10.0;
  return w;
}

}  // namespace

TEST_CASE("detection metric hand counts") {
  auto m = detection_metrics({1, 2}, {1, 2}, 4);
  CHECK(m.dacc == 1.0);
  CHECK(m.fpr == 0.0);
  CHECK(m.fnr == 0.0);
  m = detection_metrics({1, 2}, {2, 3}, 4);
  CHECK(m.dacc == 0.5);
  CHECK(m.fpr == 0.5);
  CHECK(m.fnr == 0.5);
  m = detection_metrics({}, {}, 5);
  CHECK(m.dacc == 1.0);
  CHECK(m.fpr == 0.0);
  CHECK(m.fnr == 0.0);
  // No detection: every client is called benign.
  m = detection_metrics({0, 1, 2}, {}, 10);
  CHECK(m.dacc == 0.7);
  CHECK(m.fnr == 1.0);
}

TEST_CASE("detection metrics identity and range") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 30;
    std::set<ClientId> truth;
    std::set<ClientId> flagged;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 3 == 0) truth.insert(i);
      if (rng() % 4 == 0) flagged.insert(i);
    }
    const auto m = detection_metrics(truth, flagged, n);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < n; ++i) errors += truth.count(i) != flagged.count(i);
    CHECK(m.dacc + static_cast<double>(errors) / static_cast<double>(n) == doctest::Approx(1.0));
    for (double v : {m.dacc, m.fpr, m.fnr}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("accuracy") {
  const auto data = generate_synthetic(4, 6, 250, 2);
  const ModelSpec spec{ModelKind::Logistic, 6, 4, 0};
  CHECK_THROWS_AS(accuracy(spec, ParamVector::zeros(28), Dataset(4, 6)), InvalidArgument);

  // Constant-class model on balanced data.
  CHECK(accuracy(spec, constant_model(spec, 2), data) == doctest::Approx(0.25));

  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const ParamVector w(oracle::random_vec(rng, spec.param_count()));
    std::size_t hit = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.features(i);
      std::size_t best = 0;
      double best_z = -1e300;
      for (std::size_t c = 0; c < 4; ++c) {
        double z = w[24 + c];
        for (std::size_t j = 0; j < 6; ++j) z += w[c * 6 + j] * x[j];
        if (z > best_z) {
          best_z = z;
          best = c;
        }
      }
      hit += best == data.label(i);
    }
    CHECK(accuracy(spec, w, data) == static_cast<double>(hit) / static_cast<double>(data.size()));
  }
}

TEST_CASE("memorising model scores one on its train set") {
  // One example per class at the class mean direction; a model with those
  // directions as weights classifies them all correctly.
  const ModelSpec spec{ModelKind::Logistic, 3, 3, 0};
  Dataset d(3, 3);
  d.add(std::vector<double>{1, 0, 0}, 0);
  d.add(std::vector<double>{0, 1, 0}, 1);
  d.add(std::vector<double>{0, 0, 1}, 2);
  ParamVector w = ParamVector::zeros(12);
  w[0] = w[4] = w[8] = 1.0;
  CHECK(accuracy(spec, w, d) == 1.0);
}

TEST_CASE("attack success rate") {
  const auto data = generate_synthetic(2, 4, 200, 3);
  const ModelSpec spec{ModelKind::Logistic, 4, 2, 0};
  const auto trigger = make_tail_trigger(4, 1, 3.0, 1);
  CHECK(compute_asr(spec, constant_model(spec, 0), data, trigger, 0) == 1.0);
  CHECK(compute_asr(spec, constant_model(spec, 1), data, trigger, 0) == 0.0);
  CHECK_THROWS_AS(compute_asr(spec, constant_model(spec, 0), Dataset(2, 4), trigger, 0),
                  InvalidArgument);
  Dataset only_target(2, 4);
  only_target.add(std::vector<double>{1, 1, 1, 1}, 0);
  CHECK(compute_asr(spec, constant_model(spec, 1), only_target, trigger, 0) == 0.0);

  // Random 2-class models: the target is hit about half of the time.
  std::mt19937_64 rng(4);
  double total = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep)
    total += compute_asr(spec, ParamVector(oracle::random_vec(rng, 10)), data, trigger, 0);
  CHECK(total / reps == doctest::Approx(0.5).epsilon(0.2));
}
