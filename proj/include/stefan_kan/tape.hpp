// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reverse accumulation over a linearized tape.
//
// Every recorded node stores its value and the partial derivatives with
// respect to its parents at record time, so the reverse sweep is a single
// pass of multiply-adds. Indices [0, num_params) are reserved for trainable
// parameters. Coarse operations (a whole KAN evaluation, see kan.hpp) may be
// recorded as a Block with a hand-written adjoint.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stefan_kan/error.hpp"
#include "stefan_kan/jet.hpp"

namespace stefan_kan {

class Tape;

/// Handle to a taped scalar. A default or double-constructed Var is a
/// constant that records nothing.
struct Var {
  Tape* tape = nullptr;
  std::int32_t index = -1;
  double value = 0.0;

  Var() = default;
  Var(double c) : value(c) {}  // NOLINT: implicit constant
  Var(Tape* t, std::int32_t i, double v) : tape(t), index(i), value(v) {}

  bool is_constant() const { return index < 0; }
};

class Tape {
 public:
  /// Adjoint storage seen by a block: parameter leaves and recorded nodes
  /// live in separate buffers, addressed by the global Var index.
  struct Adjoints {
    std::span<double> params;
    std::span<double> nodes;
    double& operator[](std::int32_t index) const {
      const auto i = static_cast<std::size_t>(index);
      return i < params.size() ? params[i] : nodes[i - params.size()];
    }
  };

  /// Operation with a hand-written adjoint. Its outputs occupy a contiguous
  /// range of tape nodes; backward() reads their adjoints and adds into the
  /// adjoints of whatever it consumed (earlier nodes or parameter leaves).
  class Block {
   public:
    virtual ~Block() = default;
    virtual void backward(const Adjoints& adjoints) const = 0;
  };

  explicit Tape(std::size_t num_params = 0) { reset(num_params); }

  /// Drops all recorded nodes; keeps allocated capacity and block objects
  /// for reuse.
  void reset(std::size_t num_params) {
    num_params_ = num_params;
    param_values_.clear();
    values_.clear();
    nodes_.clear();
    parents_.clear();
    partials_.clear();
    live_blocks_ = 0;
  }

  std::size_t num_params() const { return num_params_; }
  std::size_t size() const { return num_params_ + values_.size(); }

  /// Leaf variable for parameter slot i.
  Var param(std::size_t i, double value) {
    if (i >= num_params_) throw ShapeError("parameter slot out of range");
    if (param_values_.size() < num_params_) param_values_.resize(num_params_, 0.0);
    param_values_[i] = value;
    return {this, static_cast<std::int32_t>(i), value};
  }

  /// Records a node with explicit (parent index, partial) pairs. Constant
  /// parents (index < 0) are skipped.
  Var record(double value, std::span<const std::int32_t> parents, std::span<const double> partials) {
    const auto begin = static_cast<std::uint32_t>(parents_.size());
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (parents[i] < 0) continue;
      parents_.push_back(parents[i]);
      partials_.push_back(partials[i]);
    }
    return push_node(value, begin);
  }

  Var record1(double value, const Var& a, double da) {
    const auto begin = static_cast<std::uint32_t>(parents_.size());
    if (!a.is_constant()) {
      parents_.push_back(a.index);
      partials_.push_back(da);
    }
    return push_node(value, begin);
  }

  Var record2(double value, const Var& a, double da, const Var& b, double db) {
    const auto begin = static_cast<std::uint32_t>(parents_.size());
    if (!a.is_constant()) {
      parents_.push_back(a.index);
      partials_.push_back(da);
    }
    if (!b.is_constant()) {
      parents_.push_back(b.index);
      partials_.push_back(db);
    }
    return push_node(value, begin);
  }

  /// A block of type B for the next record_block call: a recycled object
  /// from an earlier recording when one of that type is available, else a
  /// fresh one. The caller re-initializes it.
  template <class B>
  B& next_block() {
    if (live_blocks_ < blocks_.size()) {
      if (auto* b = dynamic_cast<B*>(blocks_[live_blocks_].get())) return *b;
      blocks_[live_blocks_] = std::make_unique<B>();
    } else {
      blocks_.push_back(std::make_unique<B>());
    }
    return static_cast<B&>(*blocks_[live_blocks_]);
  }

  /// Registers the block returned by next_block() with outputs of the given
  /// values. Returns the index of the first output node; output j is node
  /// first + j.
  std::int32_t record_block(std::span<const double> output_values) {
    if (live_blocks_ >= blocks_.size()) throw ShapeError("record_block without next_block");
    const auto first = static_cast<std::int32_t>(size());
    const auto id = static_cast<std::int32_t>(live_blocks_++);
    const auto begin = static_cast<std::uint32_t>(parents_.size());
    for (std::size_t j = 0; j < output_values.size(); ++j) {
      values_.push_back(output_values[j]);
      nodes_.push_back(Node{begin, begin, j == 0 ? id : -1});
    }
    return first;
  }

  /// Adds scale·∂out/∂θ into grad (length num_params).
  void accumulate_gradient(const Var& out, std::span<double> grad, double scale = 1.0) {
    if (grad.size() != num_params_) throw ShapeError("gradient buffer length differs from parameter count");
    if (!std::isfinite(out.value)) throw_non_finite(out);
    if (out.is_constant() || scale == 0.0) return;
    if (out.tape != this) throw ShapeError("variable recorded on a different tape");
    const auto top = static_cast<std::size_t>(out.index);
    if (top < num_params_) {
      grad[top] += scale;
      return;
    }
    // Parameter adjoints are linear in the seed, so they go straight into
    // grad; only node adjoints need scratch space.
    adjoint_.assign(top - num_params_ + 1, 0.0);
    adjoint_.back() = scale;
    const Adjoints adj{grad, adjoint_};
    for (std::size_t k = top - num_params_ + 1; k-- > 0;) {
      const Node& node = nodes_[k];
      if (node.block >= 0) {
        blocks_[static_cast<std::size_t>(node.block)]->backward(adj);
        continue;
      }
      const double a = adjoint_[k];
      if (a == 0.0) continue;
      for (std::uint32_t e = node.begin; e < node.end; ++e) adj[parents_[e]] += partials_[e] * a;
    }
  }

  std::vector<double> gradient(const Var& out) {
    std::vector<double> g(num_params_, 0.0);
    accumulate_gradient(out, g);
    return g;
  }

  /// Value stored at a global node index.
  double value(std::size_t node) const {
    if (node < num_params_) return node < param_values_.size() ? param_values_[node] : 0.0;
    return values_[node - num_params_];
  }

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t block;
  };

  Var push_node(double value, std::uint32_t begin) {
    const auto idx = static_cast<std::int32_t>(size());
    values_.push_back(value);
    nodes_.push_back(Node{begin, static_cast<std::uint32_t>(parents_.size()), -1});
    return {this, idx, value};
  }

  [[noreturn]] void throw_non_finite(const Var& out) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]))
        throw NonFiniteError("non-finite intermediate at tape node " + std::to_string(num_params_ + i),
                             num_params_ + i);
    }
    throw NonFiniteError("non-finite loss value " + std::to_string(out.value),
                         out.is_constant() ? NonFiniteError::npos : static_cast<std::size_t>(out.index));
  }

  std::size_t num_params_ = 0;
  std::vector<double> param_values_;
  std::vector<double> values_;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> parents_;
  std::vector<double> partials_;
  std::vector<std::unique_ptr<Block>> blocks_;
  std::size_t live_blocks_ = 0;
  std::vector<double> adjoint_;
};

// ---------------------------------------------------------------------------
// Var arithmetic.

namespace detail {
inline Tape* tape_of(const Var& a, const Var& b) { return a.tape != nullptr ? a.tape : b.tape; }
inline Var unary(const Var& a, double value, double da) {
  if (a.is_constant()) return Var(value);
  return a.tape->record1(value, a, da);
}
inline Var binary(const Var& a, const Var& b, double value, double da, double db) {
  if (a.is_constant() && b.is_constant()) return Var(value);
  return tape_of(a, b)->record2(value, a, da, b, db);
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) { return detail::binary(a, b, a.value + b.value, 1.0, 1.0); }
inline Var operator-(const Var& a, const Var& b) { return detail::binary(a, b, a.value - b.value, 1.0, -1.0); }
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value * b.value, b.value, a.value);
}
inline Var operator/(const Var& a, const Var& b) {
  if (b.value == 0.0) throw UnsupportedOperation("division by a zero variable");
  const double r = 1.0 / b.value;
  return detail::binary(a, b, a.value * r, r, -a.value * r * r);
}
inline Var operator-(const Var& a) { return detail::unary(a, -a.value, -1.0); }
inline Var operator+(const Var& a, double c) { return detail::unary(a, a.value + c, 1.0); }
inline Var operator+(double c, const Var& a) { return a + c; }
inline Var operator-(const Var& a, double c) { return detail::unary(a, a.value - c, 1.0); }
inline Var operator-(double c, const Var& a) { return detail::unary(a, c - a.value, -1.0); }
inline Var operator*(const Var& a, double c) { return detail::unary(a, a.value * c, c); }
inline Var operator*(double c, const Var& a) { return a * c; }
inline Var operator/(const Var& a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, const Var& a) {
  if (a.value == 0.0) throw UnsupportedOperation("division by a zero variable");
  const double r = 1.0 / a.value;
  return detail::unary(a, c * r, -c * r * r);
}
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

// Comparisons look at values only; they contribute nothing to derivatives.
inline bool operator<(const Var& a, const Var& b) { return a.value < b.value; }
inline bool operator>(const Var& a, const Var& b) { return a.value > b.value; }
inline bool operator<=(const Var& a, const Var& b) { return a.value <= b.value; }
inline bool operator>=(const Var& a, const Var& b) { return a.value >= b.value; }

inline Var exp(const Var& a) {
  const double e = std::exp(a.value);
  return detail::unary(a, e, e);
}
inline Var log(const Var& a) {
  if (!(a.value > 0.0)) throw UnsupportedOperation("log of a non-positive variable");
  return detail::unary(a, std::log(a.value), 1.0 / a.value);
}
inline Var sqrt(const Var& a) {
  if (!(a.value > 0.0)) throw UnsupportedOperation("sqrt derivative undefined at non-positive value");
  const double s = std::sqrt(a.value);
  return detail::unary(a, s, 0.5 / s);
}
inline Var square(const Var& a) { return detail::unary(a, a.value * a.value, 2.0 * a.value); }
inline double square(double a) { return a * a; }
inline Var sigmoid(const Var& a) {
  const double s = sigmoid(a.value);
  return detail::unary(a, s, s * (1.0 - s));
}
inline Var erf(const Var& a) {
  return detail::unary(a, std::erf(a.value),
                       (2.0 / std::sqrt(std::numbers::pi)) * std::exp(-a.value * a.value));
}

// ---------------------------------------------------------------------------
// Entry points.

/// (f, ∂f/∂x_i, ∂²f/∂x_i²) of f at `inputs` along coordinate `direction`.
/// `f` takes std::span<const Jet2<double>> and returns Jet2<double>.
template <class F>
Jet2<double> directional_jet(F&& f, std::span<const double> inputs, std::size_t direction) {
  if (direction >= inputs.size()) throw ShapeError("jet direction index out of range");
  std::vector<Jet2<double>> x(inputs.begin(), inputs.end());
  x[direction].d1 = 1.0;
  return f(std::span<const Jet2<double>>(x));
}

/// ∂loss/∂θ for a loss recorded on `tape`.
inline std::vector<double> parameter_gradient(Tape& tape, const Var& loss) { return tape.gradient(loss); }

/// Records f(tape, θ) with θ as tape leaves and returns (value, gradient).
template <class F>
std::pair<double, std::vector<double>> value_and_gradient(F&& f, std::span<const double> params) {
  Tape tape(params.size());
  std::vector<Var> theta;
  theta.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) theta.push_back(tape.param(i, params[i]));
  const Var loss = f(tape, std::span<const Var>(theta));
  return {loss.value, tape.gradient(loss)};
}

}  // namespace stefan_kan
