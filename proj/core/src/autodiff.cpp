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

#include "rdense/autodiff.hpp"

#include <algorithm>

#include "rdense/error.hpp"

namespace rdense {

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::vector<Var<T>> inputs,
                       Adjoint adjoint) {
  const bool needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                      [](const Var<T>& v) { return v.requires_grad(); });
  Var<T> out = Var<T>::leaf(std::move(value), needs_grad);
  entries_.push_back(Entry{std::move(inputs), out, std::move(adjoint)});
  return out;
}

template <typename T>
bool Tape<T>::contains(const Var<T>& v) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.output == v; });
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (!loss) throw UsageError("backward on an empty variable");
  auto it = std::find_if(entries_.rbegin(), entries_.rend(),
                         [&](const Entry& e) { return e.output == loss; });
  if (it == entries_.rend()) {
    throw UsageError("backward: variable was not produced on this tape");
  }
  if (loss.value().numel() != 1) {
    throw UsageError("backward: loss must hold a single element, got shape " +
                     loss.shape().str());
  }
  if (!loss.requires_grad()) return;
  loss.node()->grad_buffer().fill(T(1));
  for (; it != entries_.rend(); ++it) {
    Node<T>* out = it->output.node();
    if (!out->requires_grad || out->grad.empty()) continue;
    it->adjoint(out->grad);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace rdense
