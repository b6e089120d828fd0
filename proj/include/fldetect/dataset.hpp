// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fld {

/// Labelled feature vectors stored row-major.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t num_classes, std::size_t feature_dim);

  void add(std::span<const double> features, std::size_t label);
  void reserve(std::size_t n);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }

  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * feature_dim_, feature_dim_};
  }
  std::size_t label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

  std::vector<std::size_t> class_histogram() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t num_classes_ = 0;
  std::size_t feature_dim_ = 0;
  std::vector<double> features_;
  std::vector<std::size_t> labels_;
};

/// Gaussian mixture: class c ~ N(mu_c, I), with the class means placed on
/// random orthonormal directions at distance 4 from the origin (pairs of
/// means are 4*sqrt(2) apart).
/// Examples are ordered by class. Requires classes >= 2 and features >= classes.
Dataset generate_synthetic(std::size_t classes, std::size_t features, std::size_t per_class,
                           std::uint64_t seed);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// Shuffles and holds out round(test_fraction * size) examples.
TrainTestSplit train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Label-skewed partition into n shards. Clients form C contiguous groups
/// (the last group absorbs the remainder). An example with label l goes to
/// group l with probability `degree`, to each other group with probability
/// (1 - degree) / (C - 1), then to a uniformly chosen client of that group.
/// degree = 1/C is iid. Requires n >= C and degree in [1/C, 1].
std::vector<Dataset> split_noniid(const Dataset& data, std::size_t n, double degree,
                                  std::uint64_t seed);

/// Group index of each client under split_noniid's grouping.
std::size_t client_group(std::size_t client, std::size_t n, std::size_t classes);

/// Rows of `label,f1,f2,...`; an optional header is detected by a
/// non-numeric first cell. Ragged rows and bad labels are errors.
/// num_classes = 0 infers it as max label + 1.
Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t num_classes = 0);

/// q-th quantile (q in [0,1]) of |x_ij| over all features of all examples.
double feature_magnitude_quantile(const Dataset& data, double q);

}  // namespace fld
