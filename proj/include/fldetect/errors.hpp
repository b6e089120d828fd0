// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fld {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Cholesky met a pivot at or below the positive-definiteness floor.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t pivot_index, double pivot)
      : Error("matrix is not positive definite (pivot " + std::to_string(pivot_index) +
              " = " + std::to_string(pivot) + ")"),
        pivot_index_(pivot_index),
        pivot_(pivot) {}

  std::size_t pivot_index() const noexcept { return pivot_index_; }
  double pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_index_;
  double pivot_;
};

class EmptyWindow : public Error {
 public:
  EmptyWindow() : Error("history window holds no admitted pairs") {}
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fld
