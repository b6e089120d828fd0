// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "fldetect/aggregation.hpp"
#include "fldetect/errors.hpp"
#include "oracles.hpp"

using namespace fld;

namespace {

std::vector<ParamVector> wrap(const std::vector<oracle::Vec>& u) {
  std::vector<ParamVector> out;
  for (const auto& v : u) out.emplace_back(v);
  return out;
}

std::vector<oracle::Vec> random_updates(std::mt19937_64& rng, std::size_t n, std::size_t p) {
  std::vector<oracle::Vec> u;
  for (std::size_t i = 0; i < n; ++i) u.push_back(oracle::random_vec(rng, p));
  return u;
}

}  // namespace

TEST_CASE("fedavg") {
  CHECK(fedavg(std::vector<ParamVector>{{1, 1}, {3, 3}}) == ParamVector{2, 2});
  CHECK(fedavg(std::vector<ParamVector>{{4, -1}}) == ParamVector{4, -1});
  CHECK_THROWS_AS(fedavg(std::vector<ParamVector>{}), InvalidArgument);

  std::mt19937_64 rng(1);
  const auto u = random_updates(rng, 100, 6);
  const auto got = fedavg(wrap(u));
  for (std::size_t c = 0; c < 6; ++c) {
    double s = 0.0;
    for (const auto& v : u) s += v[c];
    CHECK(got[c] == doctest::Approx(s / 100.0).epsilon(1e-12));
  }
}

TEST_CASE("krum hand cases") {
  // Points 1 and 2 tie at score 2; the lower index wins.
  const std::vector<ParamVector> u{{0}, {1}, {2}, {3}, {100}};
  const auto choice = krum(u, 1);
  CHECK(choice.index == 1);
  CHECK(choice.update == ParamVector{1});

  const std::vector<ParamVector> same(5, ParamVector{1, 2});
  CHECK(krum(same, 1).index == 0);

  const std::vector<ParamVector> tight{{1, 1}, {1.1, 0.9}, {0.9, 1.05}, {1.02, 1.0}, {50, -40}};
  CHECK(krum(tight, 1).index != 4);
  CHECK_THROWS_AS(krum(tight, 3), InvalidArgument);
}

TEST_CASE("krum matches exhaustive scoring") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 3 + rep % 6;
    const std::size_t k = rep % (n - 2);
    const auto u = random_updates(rng, n, 1 + rep % 4);
    const auto got = krum(wrap(u), k);
    CHECK(got.index == oracle::krum_index(u, k));
    CHECK(got.update == ParamVector(u[got.index]));
  }
}

TEST_CASE("trimmed mean") {
  const std::vector<ParamVector> u{{5}, {1}, {3}, {2}, {4}};
  CHECK(trimmed_mean(u, 1) == ParamVector{3});
  CHECK(trimmed_mean(u, 0) == fedavg(u));
  CHECK_THROWS_AS(trimmed_mean(u, 3), InvalidArgument);

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto v = random_updates(rng, 20, 8);
    const auto got = trimmed_mean(wrap(v), 3);
    CHECK(oracle::rel_err(got.raw(), oracle::trimmed_mean(v, 3)) <= 1e-12);
  }
}

TEST_CASE("median") {
  CHECK(median(std::vector<ParamVector>{{1}, {9}, {5}}) == ParamVector{5});
  CHECK(median(std::vector<ParamVector>{{1}, {2}, {3}, {4}}) == ParamVector{2.5});
  CHECK_THROWS_AS(median(std::vector<ParamVector>{}), InvalidArgument);

  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const auto v = random_updates(rng, 31, 10);
    CHECK(median(wrap(v)).raw() == oracle::median(v));
  }
}

TEST_CASE("permutation invariance and bounds") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto u = random_updates(rng, 9, 4);
    std::vector<std::size_t> perm(u.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<oracle::Vec> shuffled;
    for (std::size_t i : perm) shuffled.push_back(u[i]);

    CHECK(median(wrap(u)) == median(wrap(shuffled)));
    CHECK(oracle::rel_err(trimmed_mean(wrap(u), 2).raw(), trimmed_mean(wrap(shuffled), 2).raw()) <=
          1e-14);
    CHECK(perm[krum(wrap(shuffled), 2).index] == krum(wrap(u), 2).index);

    const auto med = median(wrap(u));
    const auto tm = trimmed_mean(wrap(u), 2);
    for (std::size_t c = 0; c < 4; ++c) {
      const auto col = oracle::column(u, c);
      CHECK(med[c] >= col.front());
      CHECK(med[c] <= col.back());
      CHECK(tm[c] >= col.front());
      CHECK(tm[c] <= col.back());
    }
  }
}

TEST_CASE("validation and dispatch") {
  CHECK_THROWS_AS(validate(AggregatorConfig{AggregationRule::Krum, 1}, 3), InvalidArgument);
  CHECK_NOTHROW(validate(AggregatorConfig{AggregationRule::Krum, 1}, 4));
  CHECK_THROWS_AS(validate(AggregatorConfig{AggregationRule::TrimmedMean, 2}, 4), InvalidArgument);
  const std::vector<ParamVector> u{{1}, {2}, {9}};
  CHECK(aggregate(AggregatorConfig{AggregationRule::Median, 0}, u) == ParamVector{2});
  CHECK(aggregate(AggregatorConfig{AggregationRule::FedAvg, 0}, u) == ParamVector{4});
  CHECK(parse_aggregation_rule("trimmed_mean") == AggregationRule::TrimmedMean);
  CHECK(to_string(AggregationRule::Krum) == "krum");
  CHECK_THROWS_AS(parse_aggregation_rule("mean"), InvalidArgument);
}
