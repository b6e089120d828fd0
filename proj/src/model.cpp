// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fldetect/errors.hpp"
#include "fldetect/rng.hpp"

namespace fld {

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::Logistic ? "logistic" : "mlp";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "logistic") return ModelKind::Logistic;
  if (name == "mlp") return ModelKind::MLP;
  throw InvalidArgument("unknown model kind '" + std::string(name) + "'");
}

std::size_t ModelSpec::param_count() const noexcept {
  if (kind == ModelKind::Logistic) return classes * (features + 1);
  return hidden * (features + 1) + classes * (hidden + 1);
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.features == 0 || spec.classes < 2) throw InvalidArgument("init_model: bad dimensions");
  if (spec.kind == ModelKind::MLP && spec.hidden == 0) {
    throw InvalidArgument("init_model: MLP needs a hidden layer");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 0.01);
  std::vector<double> w(spec.param_count());
  for (double& v : w) v = normal(rng);
  if (spec.kind == ModelKind::MLP) {
    // Hidden weights need enough scale for tanh units to differ.
    const double s = 1.0 / std::sqrt(static_cast<double>(spec.features));
    for (std::size_t i = 0; i < spec.hidden * spec.features; ++i) w[i] *= 100.0 * s;
  }
  return {spec, ParamVector(std::move(w))};
}

namespace {

void check_shapes(const ModelSpec& spec, const ParamVector& w, const Dataset& data) {
  if (w.dim() != spec.param_count()) throw DimensionError("model: parameter count mismatch");
  if (data.feature_dim() != spec.features) throw DimensionError("model: feature count mismatch");
  if (data.num_classes() != spec.classes) throw DimensionError("model: class count mismatch");
}

// Softmax in place; returns log-sum-exp.
double softmax(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return mx + std::log(sum);
}

void logits(const ModelSpec& spec, std::span<const double> w, std::span<const double> x,
            std::vector<double>& hidden, std::vector<double>& out) {
  const std::size_t f = spec.features;
  const std::size_t c = spec.classes;
  if (spec.kind == ModelKind::Logistic) {
    const double* weights = w.data();
    const double* bias = w.data() + c * f;
    for (std::size_t k = 0; k < c; ++k) {
      double s = bias[k];
      const double* row = weights + k * f;
      for (std::size_t j = 0; j < f; ++j) s += row[j] * x[j];
      out[k] = s;
    }
    return;
  }
  const std::size_t h = spec.hidden;
  const double* w1 = w.data();
  const double* b1 = w1 + h * f;
  const double* w2 = b1 + h;
  const double* b2 = w2 + c * h;
  for (std::size_t u = 0; u < h; ++u) {
    double s = b1[u];
    const double* row = w1 + u * f;
    for (std::size_t j = 0; j < f; ++j) s += row[j] * x[j];
    hidden[u] = std::tanh(s);
  }
  for (std::size_t k = 0; k < c; ++k) {
    double s = b2[k];
    const double* row = w2 + k * h;
    for (std::size_t u = 0; u < h; ++u) s += row[u] * hidden[u];
    out[k] = s;
  }
}

}  // namespace

LossGradient loss_and_gradient(const ModelSpec& spec, const ParamVector& w, const Dataset& data) {
  check_shapes(spec, w, data);
  if (data.empty()) throw InvalidArgument("loss_and_gradient: empty dataset");

  const std::size_t f = spec.features;
  const std::size_t c = spec.classes;
  const std::size_t h = spec.hidden;
  std::vector<double> grad(w.dim(), 0.0);
  std::vector<double> z(c);
  std::vector<double> hidden(h);
  std::vector<double> dhidden(h);
  double loss = 0.0;

  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.features(i);
    const std::size_t y = data.label(i);
    logits(spec, w.values(), x, hidden, z);
    const double zy = z[y];
    const double lse = softmax(z);
    loss += lse - zy;
    z[y] -= 1.0;  // dL/dlogits

    if (spec.kind == ModelKind::Logistic) {
      double* gw = grad.data();
      double* gb = grad.data() + c * f;
      for (std::size_t k = 0; k < c; ++k) {
        const double dk = z[k];
        double* row = gw + k * f;
        for (std::size_t j = 0; j < f; ++j) row[j] += dk * x[j];
        gb[k] += dk;
      }
      continue;
    }

    double* gw1 = grad.data();
    double* gb1 = gw1 + h * f;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + c * h;
    const double* w2 = w.values().data() + h * (f + 1);
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      const double dk = z[k];
      double* row = gw2 + k * h;
      const double* wrow = w2 + k * h;
      for (std::size_t u = 0; u < h; ++u) {
        row[u] += dk * hidden[u];
        dhidden[u] += dk * wrow[u];
      }
      gb2[k] += dk;
    }
    for (std::size_t u = 0; u < h; ++u) {
      const double da = dhidden[u] * (1.0 - hidden[u] * hidden[u]);
      double* row = gw1 + u * f;
      for (std::size_t j = 0; j < f; ++j) row[j] += da * x[j];
      gb1[u] += da;
    }
  }

  const double inv = 1.0 / static_cast<double>(data.size());
  for (double& g : grad) g *= inv;
  return {loss * inv, ParamVector(std::move(grad))};
}

double mean_loss(const ModelSpec& spec, const ParamVector& w, const Dataset& data) {
  check_shapes(spec, w, data);
  if (data.empty()) throw InvalidArgument("mean_loss: empty dataset");
  std::vector<double> z(spec.classes);
  std::vector<double> hidden(spec.hidden);
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    logits(spec, w.values(), data.features(i), hidden, z);
    const double zy = z[data.label(i)];
    const double lse = softmax(z);
    loss += lse - zy;
  }
  return loss / static_cast<double>(data.size());
}

ParamVector local_update(const ModelSpec& spec, const Dataset& shard, const ParamVector& w) {
  if (shard.empty()) throw InvalidArgument("local_update: empty shard");
  return loss_and_gradient(spec, w, shard).gradient;
}

std::size_t predict(const ModelSpec& spec, const ParamVector& w, std::span<const double> x) {
  if (x.size() != spec.features) throw DimensionError("predict: feature count mismatch");
  std::vector<double> z(spec.classes);
  std::vector<double> hidden(spec.hidden);
  logits(spec, w.values(), x, hidden, z);
  std::size_t best = 0;
  for (std::size_t k = 1; k < z.size(); ++k)
    if (z[k] > z[best]) best = k;
  return best;
}

double logistic_smoothness_bound(const Dataset& data) {
  if (data.empty()) throw InvalidArgument("logistic_smoothness_bound: empty dataset");
  const std::size_t d = data.feature_dim() + 1;
  std::vector<double> gram(d * d, 0.0);
  std::vector<double> xa(d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.features(i);
    std::copy(x.begin(), x.end(), xa.begin());
    xa[d - 1] = 1.0;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) gram[a * d + b] += xa[a] * xa[b];
  }
  for (double& g : gram) g /= static_cast<double>(data.size());

  // Power iteration; the Gram matrix is PSD so this converges to lambda_max.
  std::vector<double> v(d, 1.0);
  std::vector<double> next(d);
  double lambda = 0.0;
  for (int it = 0; it < 2000; ++it) {
    double norm = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < d; ++b) s += gram[a * d + b] * v[b];
      next[a] = s;
      norm += s * s;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (std::size_t a = 0; a < d; ++a) next[a] /= norm;
    const double prev = lambda;
    lambda = norm;
    v.swap(next);
    if (std::abs(lambda - prev) <= 1e-14 * lambda) break;
  }
  return 0.5 * lambda;
}

}  // namespace fld
