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

// Reference implementations used by the tests. None of them touch the tape,
// the op library or Eigen: they are direct loops over plain vectors.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rdense/arch_spec.hpp"
#include "rdense/network.hpp"

namespace rdense::testing {

/// NCHW activation held as plain doubles.
struct Act {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  Act() = default;
  Act(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_)
      : n(n_), c(c_), h(h_), w(w_), v(n_ * c_ * h_ * w_, 0.0) {}
  double& at(std::size_t i, std::size_t j, std::size_t y, std::size_t x) {
    return v[((i * c + j) * h + y) * w + x];
  }
  double at(std::size_t i, std::size_t j, std::size_t y, std::size_t x) const {
    return v[((i * c + j) * h + y) * w + x];
  }
};

Act to_act(const Tensor<double>& t);

/// Six nested loops over output and kernel positions; weight is
/// [c_out, c_in, k, k].
Act naive_conv2d(const Act& x, const std::vector<double>& weight, std::size_t c_out,
                 std::size_t kernel, std::size_t stride, std::size_t padding);
Act naive_relu(const Act& x);
Act naive_avg_pool2(const Act& x);
/// Per-channel normalization with the given statistics, then gamma/beta.
Act naive_affine_norm(const Act& x, const std::vector<double>& mean,
                      const std::vector<double>& var, const std::vector<double>& gamma,
                      const std::vector<double>& beta, double eps);
/// Biased per-channel batch mean and variance over N x H x W.
void naive_batch_stats(const Act& x, std::vector<double>& mean, std::vector<double>& var);
Act naive_concat(const Act& a, const Act& b);
/// [N, C] spatial means, returned as Act with h = w = 1.
Act naive_global_pool(const Act& x);
/// out[n][o] = sum_c x[n][c] * w[o][c] + b[o]
std::vector<double> naive_linear(const Act& x, const std::vector<double>& w,
                                 const std::vector<double>& b, std::size_t classes);

/// Logits of `net` on `batch` recomputed as straight-line code from the
/// parameter values looked up by path. Train mode uses batch statistics,
/// eval mode the running buffers.
std::vector<double> straight_line_forward(const Network<double>& net, const Tensor<double>& batch,
                                          bool train_mode);

/// Parameter count enumerated layer by layer from the weight shapes the
/// architecture description implies.
std::uint64_t enumerate_params(const ArchSpec& spec);

/// Mean softmax cross-entropy computed directly.
double naive_cross_entropy(const std::vector<double>& logits, std::size_t classes,
                           const std::vector<int>& labels);

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Largest relative error between `analytic` and central differences of
/// `loss` with respect to every element of `param` (perturbed in place and
/// restored).
///
/// When the central estimate disagrees by more than `tolerance` and the
/// second-order one-sided estimates on [w - h, w] and [w, w + h] also
/// disagree with each other, a ReLU kink lies inside the stencil and the loss
/// is not differentiable across it. The element is then compared with the
/// one-sided estimate of the smooth side and counted in `kinked`.
struct GradCheck {
  double max_rel_error = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t kinked = 0;
};
GradCheck finite_difference_check(const std::function<double()>& loss, Tensor<double>& param,
                                  const Tensor<double>& analytic, double step = 1e-5,
                                  std::size_t max_elements = 0, std::uint64_t sample_seed = 0,
                                  double tolerance = 1e-4);

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                             double hi = 1.0);

/// Small architecture used across the tests: k=4, m=2, B=2, 1x16x16, 10
/// classes.
ArchSpec tiny_spec();

}  // namespace rdense::testing
