// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "fldetect/errors.hpp"
#include "fldetect/rng.hpp"

namespace fld {

Dataset::Dataset(std::size_t num_classes, std::size_t feature_dim)
    : num_classes_(num_classes), feature_dim_(feature_dim) {}

void Dataset::add(std::span<const double> features, std::size_t label) {
  if (features.size() != feature_dim_) throw DimensionError("Dataset::add: wrong feature count");
  if (label >= num_classes_) throw InvalidArgument("Dataset::add: label out of range");
  for (double v : features) {
    if (!std::isfinite(v)) throw NonFiniteValue("Dataset::add: non-finite feature");
  }
  features_.insert(features_.end(), features.begin(), features.end());
  labels_.push_back(label);
}

void Dataset::reserve(std::size_t n) {
  features_.reserve(n * feature_dim_);
  labels_.reserve(n);
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(num_classes_, 0);
  for (std::size_t l : labels_) ++h[l];
  return h;
}

Dataset generate_synthetic(std::size_t classes, std::size_t features, std::size_t per_class,
                           std::uint64_t seed) {
  if (classes < 2) throw InvalidArgument("generate_synthetic: need at least 2 classes");
  if (features < classes) throw InvalidArgument("generate_synthetic: need features >= classes");
  if (per_class == 0) throw InvalidArgument("generate_synthetic: per_class must be positive");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Random orthonormal directions via Gram-Schmidt.
  std::vector<std::vector<double>> dirs;
  while (dirs.size() < classes) {
    std::vector<double> v(features);
    for (double& x : v) x = normal(rng);
    for (const auto& d : dirs) {
      const double proj = std::inner_product(v.begin(), v.end(), d.begin(), 0.0);
      for (std::size_t j = 0; j < features; ++j) v[j] -= proj * d[j];
    }
    const double len = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (len < 1e-8) continue;
    for (double& x : v) x /= len;
    dirs.push_back(std::move(v));
  }

  const double radius = 4.0;
  Dataset data(classes, features);
  data.reserve(classes * per_class);
  std::vector<double> x(features);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t j = 0; j < features; ++j) x[j] = radius * dirs[c][j] + normal(rng);
      data.add(x, c);
    }
  }
  return data;
}

TrainTestSplit train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("train_test_split: test_fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  const auto n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size())));

  TrainTestSplit out{Dataset(data.num_classes(), data.feature_dim()),
                     Dataset(data.num_classes(), data.feature_dim())};
  out.test.reserve(n_test);
  out.train.reserve(data.size() - n_test);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_test ? out.test : out.train;
    dst.add(data.features(order[i]), data.label(order[i]));
  }
  return out;
}

std::size_t client_group(std::size_t client, std::size_t n, std::size_t classes) {
  const std::size_t group_size = n / classes;
  return std::min(client / group_size, classes - 1);
}

std::vector<Dataset> split_noniid(const Dataset& data, std::size_t n, double degree,
                                  std::uint64_t seed) {
  const std::size_t classes = data.num_classes();
  if (n < classes) throw InvalidArgument("split_noniid: need at least one client per class group");
  const double lo = 1.0 / static_cast<double>(classes);
  if (!(degree >= lo - 1e-12 && degree <= 1.0)) {
    throw InvalidArgument("split_noniid: degree must lie in [1/C, 1]");
  }

  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t c = 0; c < n; ++c) members[client_group(c, n, classes)].push_back(c);

  std::vector<Dataset> shards(n, Dataset(classes, data.feature_dim()));
  Rng rng(seed);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t label = data.label(i);
    std::size_t group = label;
    if (uniform01(rng) >= degree) {
      // One of the other C-1 groups, uniformly.
      std::size_t other = uniform_index(rng, classes - 1);
      group = other >= label ? other + 1 : other;
    }
    const auto& g = members[group];
    shards[g[uniform_index(rng, g.size())]].add(data.features(i), label);
  }
  return shards;
}

namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  // from_chars for double is available in libstdc++ 11.
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset file " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_commas(line);
    double probe = 0.0;
    const bool header = first && !parse_double(cells[0], probe);
    first = false;
    if (header) continue;
    if (cells.size() < 2) {
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": no feature columns");
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": ragged row (" +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(width) + ")");
    }
    double label = 0.0;
    if (!parse_double(cells[0], label) || label < 0.0 || label != std::floor(label)) {
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": bad label");
    }
    std::vector<double> row(width - 1);
    for (std::size_t j = 1; j < width; ++j) {
      if (!parse_double(cells[j], row[j - 1]) || !std::isfinite(row[j - 1])) {
        throw InvalidArgument("dataset line " + std::to_string(line_no) + ": bad feature in column " +
                              std::to_string(j + 1));
      }
    }
    rows.push_back(std::move(row));
    labels.push_back(static_cast<std::size_t>(label));
  }
  if (rows.empty()) throw InvalidArgument("dataset file " + path.string() + " has no rows");

  const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
  if (num_classes == 0) num_classes = max_label + 1;
  if (max_label >= num_classes) throw InvalidArgument("dataset label exceeds class count");

  Dataset data(num_classes, width - 1);
  data.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) data.add(rows[i], labels[i]);
  return data;
}

double feature_magnitude_quantile(const Dataset& data, double q) {
  std::vector<double> mags;
  mags.reserve(data.size() * data.feature_dim());
  for (std::size_t i = 0; i < data.size(); ++i)
    for (double v : data.features(i)) mags.push_back(std::abs(v));
  if (mags.empty()) throw InvalidArgument("feature_magnitude_quantile: empty dataset");
  const auto idx = static_cast<std::size_t>(
      std::floor(std::clamp(q, 0.0, 1.0) * static_cast<double>(mags.size() - 1)));
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(idx), mags.end());
  return mags[idx];
}

}  // namespace fld
