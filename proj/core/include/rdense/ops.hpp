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

// Differentiable layer primitives. Every op takes the tape it records onto
// and returns the output variable; activations use NCHW layout.

#pragma once

#include <cstddef>
#include <span>

#include "rdense/autodiff.hpp"

namespace rdense {

enum class Mode { kTrain, kEval };

/// Learnable affine parameters plus running statistics of one BN layer.
/// running_mean / running_var are non-differentiable buffers.
template <typename T>
struct BatchNorm {
  Var<T> gamma;
  Var<T> beta;
  Var<T> running_mean;
  Var<T> running_var;

  static BatchNorm create(std::size_t channels);
  std::size_t channels() const { return gamma.value().numel(); }
};

struct BatchNormOptions {
  double epsilon = 1e-5;
  double momentum = 0.1;
};

namespace ops {

/// Cross-correlation without bias. weight is [C_out, C_in, kh, kw] with
/// kh, kw in {1, 3}.
template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& input, const Var<T>& weight,
              std::size_t stride, std::size_t padding);

/// Per-channel normalization. Train mode normalizes with batch statistics and
/// folds them into the running buffers; eval mode reads the buffers.
template <typename T>
Var<T> batchnorm(Tape<T>& tape, const Var<T>& input, BatchNorm<T>& bn, Mode mode,
                 const BatchNormOptions& options = {});

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& input);

/// 2x2 stride-2 average pooling, ceil-mode output. Windows clipped by an odd
/// border divide by the number of covered elements.
template <typename T>
Var<T> avg_pool2(Tape<T>& tape, const Var<T>& input);

/// [N, C, H, W] -> [N, C] spatial mean.
template <typename T>
Var<T> global_avg_pool(Tape<T>& tape, const Var<T>& input);

/// Channel-axis concatenation in argument order.
template <typename T>
Var<T> concat_channels(Tape<T>& tape, std::span<const Var<T>> inputs);

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

/// input [N, C], weight [classes, C], bias [classes].
template <typename T>
Var<T> linear(Tape<T>& tape, const Var<T>& input, const Var<T>& weight,
              const Var<T>& bias);

/// Mean over the batch of -log softmax(logits)[label].
template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& tape, const Var<T>& logits,
                             std::span<const int> labels);

/// Sum of all elements, as a single-element variable.
template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& input);

}  // namespace ops

/// Spatial output extent of a convolution; throws ConfigError when it would be
/// zero.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel,
                               std::size_t stride, std::size_t padding);

/// Output extent of avg_pool2 (ceil(extent / 2)).
constexpr std::size_t pool_output_extent(std::size_t extent) {
  return (extent + 1) / 2;
}

}  // namespace rdense
