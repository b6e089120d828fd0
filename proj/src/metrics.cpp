// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/metrics.hpp"

#include "fldetect/errors.hpp"

namespace fld {

DetectionMetrics detection_metrics(const std::set<ClientId>& truth,
                                   const std::set<ClientId>& flagged, std::size_t n) {
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (ClientId id : flagged)
    if (!truth.count(id)) ++fp;
  for (ClientId id : truth)
    if (!flagged.count(id)) ++fn;

  DetectionMetrics m;
  if (n == 0) return m;
  const std::size_t benign = n - truth.size();
  m.dacc = 1.0 - static_cast<double>(fp + fn) / static_cast<double>(n);
  m.fpr = benign ? static_cast<double>(fp) / static_cast<double>(benign) : 0.0;
  m.fnr = truth.empty() ? 0.0 : static_cast<double>(fn) / static_cast<double>(truth.size());
  return m;
}

double accuracy(const ModelSpec& spec, const ParamVector& w, const Dataset& test) {
  if (test.empty()) throw InvalidArgument("accuracy: empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (predict(spec, w, test.features(i)) == test.label(i)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double compute_asr(const ModelSpec& spec, const ParamVector& w, const Dataset& test,
                   const TriggerSpec& trigger, std::size_t target) {
  if (test.empty()) throw InvalidArgument("compute_asr: empty test set");
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test.label(i) == target) continue;
    ++total;
    if (predict(spec, w, embed_trigger(test.features(i), trigger)) == target) ++hits;
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

}  // namespace fld
