// Copyright 2026 The RDenseCNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode differentiation. A Var is a shared handle to a value and its
// gradient; a Tape records every operation applied to Vars together with an
// adjoint closure, and replays those closures in reverse on backward().

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rdense/tensor.hpp"

namespace rdense {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;

  /// Gradient storage, allocated as zeros on first use.
  Tensor<T>& grad_buffer() {
    if (grad.empty() && value.numel() > 0) grad = Tensor<T>(value.shape());
    return grad;
  }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  /// A variable not produced by any recorded operation (inputs, parameters).
  static Var leaf(Tensor<T> value, bool requires_grad = false) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return Var(std::move(node));
  }

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->grad_buffer(); }
  void clear_grad() { node_->grad = Tensor<T>(); }

  Node<T>* node() const { return node_.get(); }
  explicit operator bool() const { return static_cast<bool>(node_); }

  friend bool operator==(const Var& a, const Var& b) { return a.node_ == b.node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Ordered record of executed operations. Entries are appended in execution
/// order, so every entry's inputs were produced before it.
template <typename T>
class Tape {
 public:
  /// Receives the gradient of the recorded output and accumulates into the
  /// gradients of the inputs that require one.
  using Adjoint = std::function<void(const Tensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Appends an operation. The output requires a gradient iff any input does.
  Var<T> record(Tensor<T> value, std::vector<Var<T>> inputs, Adjoint adjoint);

  /// Seeds d(loss)/d(loss) = 1 and runs adjoints in reverse, visiting each
  /// entry once. Gradients sum across fan-out. Throws UsageError when `loss`
  /// is not a recorded single-element output.
  void backward(const Var<T>& loss);

  bool contains(const Var<T>& v) const;
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::vector<Var<T>> inputs;
    Var<T> output;
    Adjoint adjoint;
  };
  std::vector<Entry> entries_;
};

/// Gradient buffer of `v` if it participates in differentiation, else null.
template <typename T>
Tensor<T>* grad_sink(const Var<T>& v) {
  return v.requires_grad() ? &v.node()->grad_buffer() : nullptr;
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace rdense
