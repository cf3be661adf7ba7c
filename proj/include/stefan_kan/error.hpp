// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace stefan_kan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation at a non-finite or otherwise unusable coordinate.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double coordinate)
      : Error(what + " (coordinate " + std::to_string(coordinate) + ")"),
        coordinate_(coordinate) {}
  double coordinate() const noexcept { return coordinate_; }

 private:
  double coordinate_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A derivative was requested where the primitive has none (sqrt at 0, ...).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// A loss or intermediate became NaN/Inf. `node` is the tape index of the
/// first offending intermediate, or npos when not taped.
class NonFiniteError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  NonFiniteError(const std::string& what, std::size_t node = npos)
      : Error(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// ‖∇φ‖ too small to define a normal.
class DegenerateGradient : public Error {
 public:
  DegenerateGradient(const std::string& what, double x, double y, double t)
      : Error(what), x_(x), y_(y), t_(t) {}
  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double t() const noexcept { return t_; }

 private:
  double x_, y_, t_;
};

class RootBracketError : public Error {
 public:
  using Error::Error;
};

class EmptyBatch : public Error {
 public:
  using Error::Error;
};

/// Problems reading a serialized document.
class FormatError : public Error {
 public:
  enum class Kind { version, truncated, shape, value };
  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Invalid configuration; `field` names the offending dotted key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace stefan_kan
