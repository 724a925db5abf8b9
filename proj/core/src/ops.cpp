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

#include "rdense/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rdense/error.hpp"

namespace rdense {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

void require_rank(const Shape& shape, std::size_t rank, const char* op,
                  const char* what) {
  if (shape.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + shape.str());
  }
}

struct ConvGeometry {
  std::size_t channels_in, height, width;
  std::size_t kernel_h, kernel_w, stride, padding;
  std::size_t out_h, out_w;

  std::size_t patch() const { return channels_in * kernel_h * kernel_w; }
  std::size_t positions() const { return out_h * out_w; }
  bool is_pointwise() const {
    return kernel_h == 1 && kernel_w == 1 && stride == 1 && padding == 0;
  }
};

// col is [C_in*kh*kw, out_h*out_w] row-major.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels_in; ++c) {
    const T* plane = image + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        T* row = col + ((c * g.kernel_h + ki) * g.kernel_w + kj) * positions;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
          T* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + ih * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
            dst[ow] = (iw < 0 || iw >= static_cast<long>(g.width)) ? T(0) : src[iw];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* image) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels_in; ++c) {
    T* plane = image + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const T* row = col + ((c * g.kernel_h + ki) * g.kernel_w + kj) * positions;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
          if (ih < 0 || ih >= static_cast<long>(g.height)) continue;
          T* dst = plane + ih * g.width;
          const T* src = row + oh * g.out_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
            if (iw >= 0 && iw < static_cast<long>(g.width)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel,
                               std::size_t stride, std::size_t padding) {
  if (stride == 0) throw ConfigError("convolution stride must be positive");
  if (extent + 2 * padding < kernel) {
    throw ConfigError("convolution output would be empty: extent " +
                      std::to_string(extent) + ", kernel " + std::to_string(kernel) +
                      ", padding " + std::to_string(padding));
  }
  return (extent + 2 * padding - kernel) / stride + 1;
}

template <typename T>
BatchNorm<T> BatchNorm<T>::create(std::size_t channels) {
  BatchNorm<T> bn;
  bn.gamma = Var<T>::leaf(Tensor<T>::full(Shape{channels}, T(1)), true);
  bn.beta = Var<T>::leaf(Tensor<T>::zeros(Shape{channels}), true);
  bn.running_mean = Var<T>::leaf(Tensor<T>::zeros(Shape{channels}));
  bn.running_var = Var<T>::leaf(Tensor<T>::full(Shape{channels}, T(1)));
  return bn;
}

namespace ops {

template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& input, const Var<T>& weight,
              std::size_t stride, std::size_t padding) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require_rank(xs, 4, "conv2d", "input");
  require_rank(ws, 4, "conv2d", "weight");
  if (xs[1] != ws[1]) {
    throw DimensionError("conv2d: input has " + std::to_string(xs[1]) +
                         " channels but weight expects " + std::to_string(ws[1]) +
                         " (input " + xs.str() + ", weight " + ws.str() + ")");
  }
  for (std::size_t k : {ws[2], ws[3]}) {
    if (k != 1 && k != 3) {
      throw ConfigError("conv2d: kernel extent must be 1 or 3, got " + ws.str());
    }
  }
  ConvGeometry g{xs[1], xs[2], xs[3], ws[2], ws[3], stride, padding, 0, 0};
  g.out_h = conv_output_extent(g.height, g.kernel_h, stride, padding);
  g.out_w = conv_output_extent(g.width, g.kernel_w, stride, padding);

  const std::size_t batch = xs[0], c_out = ws[0];
  const std::size_t patch = g.patch(), positions = g.positions();
  const std::size_t in_stride = g.channels_in * g.height * g.width;
  const std::size_t out_stride = c_out * positions;

  Tensor<T> out(Shape{batch, c_out, g.out_h, g.out_w});
  ConstMatrixMap<T> w(weight.value().ptr(), c_out, patch);
  std::vector<T> col(g.is_pointwise() ? 0 : patch * positions);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* x = input.value().ptr() + n * in_stride;
    if (!g.is_pointwise()) im2col(x, g, col.data());
    const T* cols = g.is_pointwise() ? x : col.data();
    MatrixMap<T>(out.ptr() + n * out_stride, c_out, positions).noalias() =
        w * ConstMatrixMap<T>(cols, patch, positions);
  }

  Var<T> in = input, wt = weight;
  return tape.record(std::move(out), {input, weight}, [in, wt, g, batch, c_out](const Tensor<T>& gout) {
    const std::size_t patch = g.patch(), positions = g.positions();
    const std::size_t in_stride = g.channels_in * g.height * g.width;
    const std::size_t out_stride = c_out * positions;
    Tensor<T>* gx = grad_sink(in);
    Tensor<T>* gw = grad_sink(wt);
    ConstMatrixMap<T> w(wt.value().ptr(), c_out, patch);
    std::vector<T> col(patch * positions);
    for (std::size_t n = 0; n < batch; ++n) {
      ConstMatrixMap<T> go(gout.ptr() + n * out_stride, c_out, positions);
      const T* x = in.value().ptr() + n * in_stride;
      if (gw) {
        if (g.is_pointwise()) {
          MatrixMap<T>(gw->ptr(), c_out, patch).noalias() +=
              go * ConstMatrixMap<T>(x, patch, positions).transpose();
        } else {
          im2col(x, g, col.data());
          MatrixMap<T>(gw->ptr(), c_out, patch).noalias() +=
              go * ConstMatrixMap<T>(col.data(), patch, positions).transpose();
        }
      }
      if (gx) {
        T* dx = gx->ptr() + n * in_stride;
        if (g.is_pointwise()) {
          MatrixMap<T>(dx, patch, positions).noalias() += w.transpose() * go;
        } else {
          MatrixMap<T>(col.data(), patch, positions).noalias() = w.transpose() * go;
          col2im_add(col.data(), g, dx);
        }
      }
    }
  });
}

template <typename T>
Var<T> batchnorm(Tape<T>& tape, const Var<T>& input, BatchNorm<T>& bn, Mode mode,
                 const BatchNormOptions& options) {
  const Shape& xs = input.shape();
  require_rank(xs, 4, "batchnorm", "input");
  const std::size_t batch = xs[0], channels = xs[1], hw = xs[2] * xs[3];
  if (bn.channels() != channels || bn.beta.value().numel() != channels) {
    throw DimensionError("batchnorm: parameters sized for " +
                         std::to_string(bn.channels()) + " channels, input " + xs.str());
  }
  if (!(options.epsilon > 0)) throw ConfigError("batchnorm: epsilon must be positive");
  const std::size_t count = batch * hw;
  if (mode == Mode::kTrain && count <= 1) {
    throw ConfigError("batchnorm: train mode needs more than one value per channel, input " +
                      xs.str());
  }

  const T* x = input.value().ptr();
  const T* gamma = bn.gamma.value().ptr();
  const T* beta = bn.beta.value().ptr();
  Tensor<T> out(xs);
  Tensor<T> xhat(xs);
  std::vector<T> inv_std(channels);

  for (std::size_t c = 0; c < channels; ++c) {
    double mean, var;
    if (mode == Mode::kTrain) {
      double acc = 0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* p = x + (n * channels + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) acc += p[i];
      }
      mean = acc / static_cast<double>(count);
      double sq = 0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* p = x + (n * channels + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(count);
      const double m = options.momentum;
      T& rm = bn.running_mean.mutable_value()[c];
      T& rv = bn.running_var.mutable_value()[c];
      rm = static_cast<T>((1 - m) * rm + m * mean);
      rv = static_cast<T>((1 - m) * rv + m * sq / static_cast<double>(count - 1));
    } else {
      mean = bn.running_mean.value()[c];
      var = bn.running_var.value()[c];
    }
    const double istd = 1.0 / std::sqrt(var + options.epsilon);
    inv_std[c] = static_cast<T>(istd);
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const T h = static_cast<T>((x[off + i] - mean) * istd);
        xhat[off + i] = h;
        out[off + i] = gamma[c] * h + beta[c];
      }
    }
  }

  Var<T> in = input, g = bn.gamma, b = bn.beta;
  const bool train = mode == Mode::kTrain;
  return tape.record(
      std::move(out), {input, bn.gamma, bn.beta},
      [in, g, b, xhat = std::move(xhat), inv_std = std::move(inv_std), batch, channels,
       hw, train](const Tensor<T>& gout) {
        Tensor<T>* gx = grad_sink(in);
        Tensor<T>* gg = grad_sink(g);
        Tensor<T>* gb = grad_sink(b);
        const double count = static_cast<double>(batch * hw);
        for (std::size_t c = 0; c < channels; ++c) {
          double sum_dy = 0, sum_dy_xhat = 0;
          for (std::size_t n = 0; n < batch; ++n) {
            const std::size_t off = (n * channels + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              sum_dy += gout[off + i];
              sum_dy_xhat += gout[off + i] * xhat[off + i];
            }
          }
          if (gg) (*gg)[c] += static_cast<T>(sum_dy_xhat);
          if (gb) (*gb)[c] += static_cast<T>(sum_dy);
          if (!gx) continue;
          const double scale = g.value()[c] * static_cast<double>(inv_std[c]);
          for (std::size_t n = 0; n < batch; ++n) {
            const std::size_t off = (n * channels + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              double d = gout[off + i];
              if (train) d -= (sum_dy + xhat[off + i] * sum_dy_xhat) / count;
              (*gx)[off + i] += static_cast<T>(scale * d);
            }
          }
        }
      });
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& input) {
  Tensor<T> out(input.shape());
  const T* x = input.value().ptr();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  Var<T> in = input;
  return tape.record(std::move(out), {input}, [in](const Tensor<T>& gout) {
    Tensor<T>* gx = grad_sink(in);
    if (!gx) return;
    const T* x = in.value().ptr();
    for (std::size_t i = 0; i < gout.numel(); ++i) {
      if (x[i] > T(0)) (*gx)[i] += gout[i];
    }
  });
}

template <typename T>
Var<T> avg_pool2(Tape<T>& tape, const Var<T>& input) {
  const Shape& xs = input.shape();
  require_rank(xs, 4, "avg_pool2", "input");
  const std::size_t planes = xs[0] * xs[1], h = xs[2], w = xs[3];
  if (h == 0 || w == 0) throw DimensionError("avg_pool2: empty spatial extent " + xs.str());
  const std::size_t oh = pool_output_extent(h), ow = pool_output_extent(w);
  Tensor<T> out(Shape{xs[0], xs[1], oh, ow});
  const T* x = input.value().ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x + p * h * w;
    T* dst = out.ptr() + p * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      const std::size_t r1 = std::min(2 * i + 2, h);
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t c1 = std::min(2 * j + 2, w);
        T acc = 0;
        for (std::size_t r = 2 * i; r < r1; ++r)
          for (std::size_t c = 2 * j; c < c1; ++c) acc += src[r * w + c];
        dst[i * ow + j] = acc / static_cast<T>((r1 - 2 * i) * (c1 - 2 * j));
      }
    }
  }
  Var<T> in = input;
  return tape.record(std::move(out), {input}, [in, planes, h, w, oh, ow](const Tensor<T>& gout) {
    Tensor<T>* gx = grad_sink(in);
    if (!gx) return;
    for (std::size_t p = 0; p < planes; ++p) {
      T* dst = gx->ptr() + p * h * w;
      const T* src = gout.ptr() + p * oh * ow;
      for (std::size_t i = 0; i < oh; ++i) {
        const std::size_t r1 = std::min(2 * i + 2, h);
        for (std::size_t j = 0; j < ow; ++j) {
          const std::size_t c1 = std::min(2 * j + 2, w);
          const T share = src[i * ow + j] / static_cast<T>((r1 - 2 * i) * (c1 - 2 * j));
          for (std::size_t r = 2 * i; r < r1; ++r)
            for (std::size_t c = 2 * j; c < c1; ++c) dst[r * w + c] += share;
        }
      }
    }
  });
}

template <typename T>
Var<T> global_avg_pool(Tape<T>& tape, const Var<T>& input) {
  const Shape& xs = input.shape();
  require_rank(xs, 4, "global_avg_pool", "input");
  const std::size_t planes = xs[0] * xs[1], hw = xs[2] * xs[3];
  if (hw == 0) throw DimensionError("global_avg_pool: empty spatial extent " + xs.str());
  Tensor<T> out(Shape{xs[0], xs[1]});
  const T* x = input.value().ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    T acc = 0;
    for (std::size_t i = 0; i < hw; ++i) acc += x[p * hw + i];
    out[p] = acc / static_cast<T>(hw);
  }
  Var<T> in = input;
  return tape.record(std::move(out), {input}, [in, planes, hw](const Tensor<T>& gout) {
    Tensor<T>* gx = grad_sink(in);
    if (!gx) return;
    for (std::size_t p = 0; p < planes; ++p) {
      const T share = gout[p] / static_cast<T>(hw);
      for (std::size_t i = 0; i < hw; ++i) (*gx)[p * hw + i] += share;
    }
  });
}

template <typename T>
Var<T> concat_channels(Tape<T>& tape, std::span<const Var<T>> inputs) {
  if (inputs.empty()) throw DimensionError("concat_channels: no inputs");
  const Shape& first = inputs[0].shape();
  require_rank(first, 4, "concat_channels", "input");
  std::size_t channels = 0;
  for (const Var<T>& v : inputs) {
    const Shape& s = v.shape();
    if (s.rank() != 4 || s[0] != first[0] || s[2] != first[2] || s[3] != first[3]) {
      throw DimensionError("concat_channels: " + s.str() + " does not match " + first.str() +
                           " in batch or spatial extent");
    }
    channels += s[1];
  }
  const std::size_t batch = first[0], hw = first[2] * first[3];
  Tensor<T> out(Shape{batch, channels, first[2], first[3]});
  for (std::size_t n = 0; n < batch; ++n) {
    T* dst = out.ptr() + n * channels * hw;
    for (const Var<T>& v : inputs) {
      const std::size_t block = v.shape()[1] * hw;
      const T* src = v.value().ptr() + n * block;
      dst = std::copy(src, src + block, dst);
    }
  }
  std::vector<Var<T>> ins(inputs.begin(), inputs.end());
  return tape.record(std::move(out), ins, [ins, batch, channels, hw](const Tensor<T>& gout) {
    std::size_t offset = 0;
    for (const Var<T>& v : ins) {
      const std::size_t block = v.shape()[1] * hw;
      if (Tensor<T>* gx = grad_sink(v)) {
        for (std::size_t n = 0; n < batch; ++n) {
          const T* src = gout.ptr() + n * channels * hw + offset;
          T* dst = gx->ptr() + n * block;
          for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
        }
      }
      offset += block;
    }
  });
}

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  Var<T> lhs = a, rhs = b;
  return tape.record(std::move(out), {a, b}, [lhs, rhs](const Tensor<T>& gout) {
    for (const Var<T>* v : {&lhs, &rhs}) {
      if (Tensor<T>* g = grad_sink(*v)) {
        for (std::size_t i = 0; i < gout.numel(); ++i) (*g)[i] += gout[i];
      }
    }
  });
}

template <typename T>
Var<T> linear(Tape<T>& tape, const Var<T>& input, const Var<T>& weight,
              const Var<T>& bias) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require_rank(xs, 2, "linear", "input");
  require_rank(ws, 2, "linear", "weight");
  if (xs[1] != ws[1] || bias.shape() != Shape{ws[0]}) {
    throw DimensionError("linear: input " + xs.str() + ", weight " + ws.str() + ", bias " +
                         bias.shape().str() + " do not agree");
  }
  const std::size_t batch = xs[0], features = xs[1], classes = ws[0];
  Tensor<T> out(Shape{batch, classes});
  MatrixMap<T> y(out.ptr(), batch, classes);
  y.noalias() = ConstMatrixMap<T>(input.value().ptr(), batch, features) *
                ConstMatrixMap<T>(weight.value().ptr(), classes, features).transpose();
  y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.value().ptr(), classes);

  Var<T> in = input, wt = weight, b = bias;
  return tape.record(std::move(out), {input, weight, bias},
                     [in, wt, b, batch, features, classes](const Tensor<T>& gout) {
                       ConstMatrixMap<T> go(gout.ptr(), batch, classes);
                       if (Tensor<T>* gx = grad_sink(in)) {
                         MatrixMap<T>(gx->ptr(), batch, features).noalias() +=
                             go * ConstMatrixMap<T>(wt.value().ptr(), classes, features);
                       }
                       if (Tensor<T>* gw = grad_sink(wt)) {
                         MatrixMap<T>(gw->ptr(), classes, features).noalias() +=
                             go.transpose() * ConstMatrixMap<T>(in.value().ptr(), batch, features);
                       }
                       if (Tensor<T>* gb = grad_sink(b)) {
                         for (std::size_t n = 0; n < batch; ++n)
                           for (std::size_t k = 0; k < classes; ++k) (*gb)[k] += gout[n * classes + k];
                       }
                     });
}

template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& tape, const Var<T>& logits,
                             std::span<const int> labels) {
  const Shape& ls = logits.shape();
  require_rank(ls, 2, "softmax_cross_entropy", "logits");
  const std::size_t batch = ls[0], classes = ls[1];
  if (labels.size() != batch) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(batch) + " rows");
  }
  if (batch == 0) throw DimensionError("softmax_cross_entropy: empty batch");
  Tensor<T> probs(ls);
  double total = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= classes) {
      throw InputError("softmax_cross_entropy: label " + std::to_string(labels[n]) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
    const T* z = logits.value().ptr() + n * classes;
    const std::size_t top = static_cast<std::size_t>(std::max_element(z, z + classes) - z);
    double rest = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      if (k != top) rest += std::exp(static_cast<double>(z[k]) - z[top]);
    }
    const double lse = z[top] + std::log1p(rest);
    for (std::size_t k = 0; k < classes; ++k) {
      probs[n * classes + k] = static_cast<T>(std::exp(z[k] - lse));
    }
    total += lse - z[labels[n]];
  }
  Tensor<T> out(Shape{}, static_cast<T>(total / static_cast<double>(batch)));
  Var<T> in = logits;
  std::vector<int> targets(labels.begin(), labels.end());
  return tape.record(std::move(out), {logits},
                     [in, probs = std::move(probs), targets, batch, classes](const Tensor<T>& gout) {
                       Tensor<T>* gx = grad_sink(in);
                       if (!gx) return;
                       const T scale = gout[0] / static_cast<T>(batch);
                       for (std::size_t n = 0; n < batch; ++n) {
                         for (std::size_t k = 0; k < classes; ++k) {
                           const T onehot = static_cast<int>(k) == targets[n] ? T(1) : T(0);
                           (*gx)[n * classes + k] += scale * (probs[n * classes + k] - onehot);
                         }
                       }
                     });
}

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& input) {
  T acc = 0;
  for (T v : input.value().data()) acc += v;
  Var<T> in = input;
  return tape.record(Tensor<T>(Shape{}, acc), {input}, [in](const Tensor<T>& gout) {
    if (Tensor<T>* gx = grad_sink(in)) {
      for (T& g : gx->data()) g += gout[0];
    }
  });
}

}  // namespace ops

#define RDENSE_INSTANTIATE_OPS(T)                                                          \
  template struct BatchNorm<T>;                                                            \
  template Var<T> ops::conv2d(Tape<T>&, const Var<T>&, const Var<T>&, std::size_t,         \
                              std::size_t);                                                \
  template Var<T> ops::batchnorm(Tape<T>&, const Var<T>&, BatchNorm<T>&, Mode,             \
                                 const BatchNormOptions&);                                 \
  template Var<T> ops::relu(Tape<T>&, const Var<T>&);                                      \
  template Var<T> ops::avg_pool2(Tape<T>&, const Var<T>&);                                 \
  template Var<T> ops::global_avg_pool(Tape<T>&, const Var<T>&);                           \
  template Var<T> ops::concat_channels(Tape<T>&, std::span<const Var<T>>);                 \
  template Var<T> ops::add(Tape<T>&, const Var<T>&, const Var<T>&);                        \
  template Var<T> ops::linear(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);      \
  template Var<T> ops::softmax_cross_entropy(Tape<T>&, const Var<T>&, std::span<const int>); \
  template Var<T> ops::sum(Tape<T>&, const Var<T>&);

RDENSE_INSTANTIATE_OPS(float)
RDENSE_INSTANTIATE_OPS(double)

#undef RDENSE_INSTANTIATE_OPS

}  // namespace rdense
