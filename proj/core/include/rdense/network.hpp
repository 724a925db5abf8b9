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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rdense/arch_spec.hpp"
#include "rdense/autodiff.hpp"
#include "rdense/ops.hpp"

namespace rdense {

template <typename T>
struct Parameter {
  std::string path;
  Var<T> var;
  Tensor<T> velocity;  // SGD momentum buffer, same shape as var
  bool weight_decay = true;
};

template <typename T>
struct Buffer {
  std::string path;
  Var<T> var;
};

/// Named parameters and buffers keyed by hierarchical layer path
/// (e.g. "block1/layer3/conv3x3/weight"). Iteration follows insertion order.
template <typename T>
class ParamStore {
 public:
  void add_parameter(std::string path, Var<T> var, bool weight_decay);
  void add_buffer(std::string path, Var<T> var);

  std::span<Parameter<T>> parameters() { return params_; }
  std::span<const Parameter<T>> parameters() const { return params_; }
  std::span<Buffer<T>> buffers() { return buffers_; }
  std::span<const Buffer<T>> buffers() const { return buffers_; }

  Parameter<T>* find(std::string_view path);
  const Parameter<T>* find(std::string_view path) const;
  Buffer<T>* find_buffer(std::string_view path);

  /// Total number of learnable scalars; buffers are not counted.
  std::size_t parameter_count() const;

  void zero_grad();
  bool any_grad() const;

 private:
  void claim(const std::string& path);

  std::vector<Parameter<T>> params_;
  std::vector<Buffer<T>> buffers_;
  std::unordered_map<std::string, std::size_t> param_index_;
  std::unordered_map<std::string, std::size_t> buffer_index_;
};

/// Instantiated RDenseCNN / PDenseCNN.
///
///   stem:   conv3x3(in -> 4k, stem_stride, pad 1) -> avg_pool2
///   blocks: dense block; all but the last add a transition
///           BN -> ReLU -> conv1x1(-> 4k) -> avg_pool2, summed with
///           avg_pool2(block input) when residual
///   head:   BN -> ReLU -> global_avg_pool -> linear
///
/// A dense layer is BN -> ReLU -> conv1x1(-> 4k) -> BN -> ReLU -> conv3x3(-> k)
/// whose output is concatenated onto its input.
///
/// Move-only: parameters are shared handles, so copies go through clone().
template <typename T>
class Network {
 public:
  static Network build(const ArchSpec& spec, std::uint64_t seed);

  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  /// Deep copy of all parameters, buffers and momentum state.
  Network clone() const;
  /// Deep copy with the residual skip switched on or off. Parameter layout is
  /// identical in both variants.
  Network clone_with_residual(bool residual) const;
  /// Copies values, buffers and velocities from a network of identical layout.
  void copy_state_from(const Network& other);

  const ArchSpec& spec() const { return spec_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }
  const BatchNormOptions& bn_options() const { return bn_options_; }

  /// Logits [N, classes] for a batch [N, C, H, W] matching the spec geometry.
  Var<T> forward(Tape<T>& tape, const Var<T>& batch, Mode mode);
  Var<T> forward(Tape<T>& tape, const Tensor<T>& batch, Mode mode);

  /// Stem convolution and pooling.
  Var<T> stem(Tape<T>& tape, const Var<T>& x);
  /// Dense block `block` (0-based): m densely connected layers.
  Var<T> dense_block(Tape<T>& tape, const Var<T>& x, std::size_t block, Mode mode);
  /// H_T(H_D(x)) + avg_pool2(x) for a non-final block, or H_T(H_D(x)) when the
  /// residual skip is disabled. `x` must carry 4k channels.
  Var<T> residual_dense_block(Tape<T>& tape, const Var<T>& x, std::size_t block, Mode mode);

 private:
  struct DenseLayer {
    BatchNorm<T> bn1;
    Var<T> conv1x1;
    BatchNorm<T> bn2;
    Var<T> conv3x3;
  };
  struct Transition {
    BatchNorm<T> bn;
    Var<T> conv1x1;
  };
  struct Block {
    std::vector<DenseLayer> layers;
    std::optional<Transition> transition;
  };

  Network() = default;
  void construct(const ArchSpec& spec, std::uint64_t seed);
  Var<T> transition(Tape<T>& tape, const Var<T>& x, Transition& t, Mode mode);

  ArchSpec spec_;
  BatchNormOptions bn_options_;
  ParamStore<T> params_;
  Var<T> stem_conv_;
  std::vector<Block> blocks_;
  BatchNorm<T> head_bn_;
  Var<T> fc_weight_;
  Var<T> fc_bias_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template class Network<float>;
extern template class Network<double>;

}  // namespace rdense
