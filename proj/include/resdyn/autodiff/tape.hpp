// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "resdyn/autodiff/tensor.hpp"

namespace resdyn::ad {

template <class T>
class Tape;

/// Handle to a value recorded on a tape.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t id = 0;

  [[nodiscard]] const Shape& shape() const { return tape->shape(id); }
  [[nodiscard]] const std::vector<T>& value() const { return tape->value(id); }
  [[nodiscard]] std::size_t size() const { return value().size(); }
  [[nodiscard]] T item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar " + to_string(shape()));
    return value()[0];
  }
};

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Records ops in execution order; backward() replays their adjoints in reverse.
/// One tape serves one forward/backward pass and is not thread-safe.
template <class T>
class Tape {
 public:
  using Backward = std::function<void(Tape&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Var<T> constant(Shape shape, std::vector<T> value) {
    if (value.size() != numel(shape)) throw ShapeError("constant: size does not match " + to_string(shape));
    return push(std::move(shape), std::move(value), false, nullptr);
  }
  Var<T> constant(const Tensor<T>& t) { return constant(t.shape, t.data); }

  /// Leaf that receives a gradient (read back with grad()).
  Var<T> input(const Tensor<T>& t) { return push(t.shape, t.data, true, nullptr); }

  /// Leaf bound to a parameter; backward() accumulates into `p.grad`.
  Var<T> param(Tensor<T>& p) { return push(p.shape, p.data, true, &p); }

  /// Node produced by an op. `backward` reads grad(out) and accumulates into its inputs.
  Var<T> record(Shape shape, std::vector<T> value, bool requires_grad, Backward backward) {
    Var<T> v = push(std::move(shape), std::move(value), requires_grad, nullptr);
    if (requires_grad) nodes_.back().backward = std::move(backward);
    return v;
  }

  [[nodiscard]] const Shape& shape(std::uint32_t id) const { return nodes_.at(id).shape; }
  [[nodiscard]] const std::vector<T>& value(std::uint32_t id) const { return nodes_.at(id).value; }
  [[nodiscard]] bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  [[nodiscard]] bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Mutable adjoint buffer, allocated on first use.
  std::vector<T>& grad(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(n.value.size(), T{});
    return n.grad;
  }
  std::vector<T>& grad(Var<T> v) { return grad(v.id); }

  /// Adjoint if one was produced, otherwise empty.
  [[nodiscard]] const std::vector<T>& grad_or_empty(Var<T> v) const { return nodes_[v.id].grad; }

  void backward(Var<T> loss) {
    if (loss.tape != this) throw TapeError("backward: loss belongs to another tape");
    if (backward_done_) throw TapeError("backward: tape already consumed; record a new pass");
    if (loss.size() != 1) throw ShapeError("backward: loss must be scalar, got " + to_string(loss.shape()));
    backward_done_ = true;
    if (!nodes_[loss.id].requires_grad) return;
    grad(loss.id)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      if (n.backward) n.backward(*this);
      if (n.param != nullptr) {
        if (n.param->grad.size() != n.value.size()) n.param->grad.assign(n.value.size(), T{});
        for (std::size_t k = 0; k < n.grad.size(); ++k) n.param->grad[k] += n.grad[k];
      }
    }
  }

  [[nodiscard]] bool consumed() const { return backward_done_; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    Backward backward;
    Tensor<T>* param = nullptr;
    bool requires_grad = false;
  };

  Var<T> push(Shape shape, std::vector<T> value, bool requires_grad, Tensor<T>* param) {
    if (backward_done_) throw TapeError("record after backward; use a fresh tape");
    nodes_.push_back(Node{std::move(shape), std::move(value), {}, {}, param, requires_grad});
    return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::deque<Node> nodes_;  // stable references to values across record()
  bool backward_done_ = false;
};

}  // namespace resdyn::ad
