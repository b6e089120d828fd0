// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Local models trained by the clients: multinomial logistic regression and a
// one-hidden-layer tanh MLP, both with mean cross-entropy loss.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "fldetect/dataset.hpp"
#include "fldetect/linalg.hpp"

namespace fld {

enum class ModelKind { Logistic, MLP };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Layer layout. Logistic: W (C x f), b (C). MLP: W1 (h x f), b1 (h),
/// W2 (C x h), b2 (C). All row-major, concatenated in that order.
struct ModelSpec {
  ModelKind kind = ModelKind::Logistic;
  std::size_t features = 0;
  std::size_t classes = 0;
  std::size_t hidden = 0;

  std::size_t param_count() const noexcept;
};

struct Model {
  ModelSpec spec;
  ParamVector params;
};

/// Small Gaussian initialisation (std 0.01, deterministic under seed).
Model init_model(const ModelSpec& spec, std::uint64_t seed);

struct LossGradient {
  double loss = 0.0;
  ParamVector gradient;
};

/// Mean cross-entropy over `data` and its exact gradient at `w`.
LossGradient loss_and_gradient(const ModelSpec& spec, const ParamVector& w, const Dataset& data);

double mean_loss(const ModelSpec& spec, const ParamVector& w, const Dataset& data);

/// One client's update: the full-batch gradient of its local loss at w_t.
/// Throws InvalidArgument on an empty shard.
ParamVector local_update(const ModelSpec& spec, const Dataset& shard, const ParamVector& w);

/// Argmax class; equal logits resolve to the lowest index.
std::size_t predict(const ModelSpec& spec, const ParamVector& w, std::span<const double> x);

/// Upper bound on the gradient Lipschitz constant of the logistic loss on
/// `data`: 0.5 * lambda_max(mean of [x;1][x;1]^T). The softmax Jacobian
/// diag(p) - p p^T has spectral norm at most 1/2.
double logistic_smoothness_bound(const Dataset& data);

}  // namespace fld
