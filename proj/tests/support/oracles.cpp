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

#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdense::testing {

Act to_act(const Tensor<double>& t) {
  Act a(t.dim(0), t.dim(1), t.dim(2), t.dim(3));
  std::copy(t.data().begin(), t.data().end(), a.v.begin());
  return a;
}

Act naive_conv2d(const Act& x, const std::vector<double>& weight, std::size_t c_out,
                 std::size_t kernel, std::size_t stride, std::size_t padding) {
  const long ho = (static_cast<long>(x.h + 2 * padding) - static_cast<long>(kernel)) /
                      static_cast<long>(stride) + 1;
  const long wo = (static_cast<long>(x.w + 2 * padding) - static_cast<long>(kernel)) /
                      static_cast<long>(stride) + 1;
  Act y(x.n, c_out, static_cast<std::size_t>(ho), static_cast<std::size_t>(wo));
  for (std::size_t n = 0; n < x.n; ++n) {
    for (std::size_t o = 0; o < c_out; ++o) {
      for (long oy = 0; oy < ho; ++oy) {
        for (long ox = 0; ox < wo; ++ox) {
          double acc = 0;
          for (std::size_t c = 0; c < x.c; ++c) {
            for (std::size_t ky = 0; ky < kernel; ++ky) {
              for (std::size_t kx = 0; kx < kernel; ++kx) {
                const long iy = oy * static_cast<long>(stride) + static_cast<long>(ky) -
                                static_cast<long>(padding);
                const long ix = ox * static_cast<long>(stride) + static_cast<long>(kx) -
                                static_cast<long>(padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(x.h) ||
                    ix >= static_cast<long>(x.w)) {
                  continue;
                }
                acc += x.at(n, c, iy, ix) * weight[((o * x.c + c) * kernel + ky) * kernel + kx];
              }
            }
          }
          y.at(n, o, oy, ox) = acc;
        }
      }
    }
  }
  return y;
}

Act naive_relu(const Act& x) {
  Act y = x;
  for (double& v : y.v) v = v > 0 ? v : 0.0;
  return y;
}

Act naive_avg_pool2(const Act& x) {
  Act y(x.n, x.c, (x.h + 1) / 2, (x.w + 1) / 2);
  for (std::size_t n = 0; n < x.n; ++n) {
    for (std::size_t c = 0; c < x.c; ++c) {
      for (std::size_t oy = 0; oy < y.h; ++oy) {
        for (std::size_t ox = 0; ox < y.w; ++ox) {
          double sum = 0;
          int covered = 0;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t iy = 2 * oy + dy, ix = 2 * ox + dx;
              if (iy < x.h && ix < x.w) {
                sum += x.at(n, c, iy, ix);
                ++covered;
              }
            }
          }
          y.at(n, c, oy, ox) = sum / covered;
        }
      }
    }
  }
  return y;
}

void naive_batch_stats(const Act& x, std::vector<double>& mean, std::vector<double>& var) {
  mean.assign(x.c, 0.0);
  var.assign(x.c, 0.0);
  const double count = static_cast<double>(x.n * x.h * x.w);
  for (std::size_t c = 0; c < x.c; ++c) {
    double s = 0;
    for (std::size_t n = 0; n < x.n; ++n)
      for (std::size_t y = 0; y < x.h; ++y)
        for (std::size_t z = 0; z < x.w; ++z) s += x.at(n, c, y, z);
    mean[c] = s / count;
    double q = 0;
    for (std::size_t n = 0; n < x.n; ++n)
      for (std::size_t y = 0; y < x.h; ++y)
        for (std::size_t z = 0; z < x.w; ++z) q += (x.at(n, c, y, z) - mean[c]) * (x.at(n, c, y, z) - mean[c]);
    var[c] = q / count;
  }
}

Act naive_affine_norm(const Act& x, const std::vector<double>& mean,
                      const std::vector<double>& var, const std::vector<double>& gamma,
                      const std::vector<double>& beta, double eps) {
  Act y = x;
  for (std::size_t n = 0; n < x.n; ++n)
    for (std::size_t c = 0; c < x.c; ++c)
      for (std::size_t h = 0; h < x.h; ++h)
        for (std::size_t w = 0; w < x.w; ++w)
          y.at(n, c, h, w) =
              gamma[c] * (x.at(n, c, h, w) - mean[c]) / std::sqrt(var[c] + eps) + beta[c];
  return y;
}

Act naive_concat(const Act& a, const Act& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) throw std::logic_error("concat geometry");
  Act y(a.n, a.c + b.c, a.h, a.w);
  for (std::size_t n = 0; n < a.n; ++n)
    for (std::size_t c = 0; c < y.c; ++c)
      for (std::size_t h = 0; h < a.h; ++h)
        for (std::size_t w = 0; w < a.w; ++w)
          y.at(n, c, h, w) = c < a.c ? a.at(n, c, h, w) : b.at(n, c - a.c, h, w);
  return y;
}

Act naive_global_pool(const Act& x) {
  Act y(x.n, x.c, 1, 1);
  for (std::size_t n = 0; n < x.n; ++n)
    for (std::size_t c = 0; c < x.c; ++c) {
      double s = 0;
      for (std::size_t h = 0; h < x.h; ++h)
        for (std::size_t w = 0; w < x.w; ++w) s += x.at(n, c, h, w);
      y.at(n, c, 0, 0) = s / static_cast<double>(x.h * x.w);
    }
  return y;
}

std::vector<double> naive_linear(const Act& x, const std::vector<double>& w,
                                 const std::vector<double>& b, std::size_t classes) {
  std::vector<double> out(x.n * classes);
  for (std::size_t n = 0; n < x.n; ++n)
    for (std::size_t o = 0; o < classes; ++o) {
      double s = b[o];
      for (std::size_t c = 0; c < x.c; ++c) s += x.v[n * x.c + c] * w[o * x.c + c];
      out[n * classes + o] = s;
    }
  return out;
}

namespace {

std::vector<double> param(const Network<double>& net, const std::string& path) {
  const Parameter<double>* p = net.params().find(path);
  if (!p) throw std::logic_error("missing parameter " + path);
  return {p->var.value().data().begin(), p->var.value().data().end()};
}

std::vector<double> buffer(const Network<double>& net, const std::string& path) {
  for (const Buffer<double>& b : net.params().buffers()) {
    if (b.path == path) return {b.var.value().data().begin(), b.var.value().data().end()};
  }
  throw std::logic_error("missing buffer " + path);
}

Act bn_relu(const Network<double>& net, const Act& x, const std::string& path, bool train) {
  std::vector<double> mean, var;
  if (train) {
    naive_batch_stats(x, mean, var);
  } else {
    mean = buffer(net, path + "/running_mean");
    var = buffer(net, path + "/running_var");
  }
  return naive_relu(naive_affine_norm(x, mean, var, param(net, path + "/gamma"),
                                      param(net, path + "/beta"), 1e-5));
}

}  // namespace

std::vector<double> straight_line_forward(const Network<double>& net, const Tensor<double>& batch,
                                          bool train) {
  const ArchSpec& s = net.spec();
  const std::size_t k = s.growth_rate, k0 = 4 * k;
  Act x = naive_conv2d(to_act(batch), param(net, "stem/conv3x3/weight"), k0, 3, s.stem_stride, 1);
  x = naive_avg_pool2(x);
  for (std::size_t b = 1; b <= s.num_blocks; ++b) {
    const Act block_in = x;
    for (std::size_t l = 1; l <= s.layers_per_block; ++l) {
      const std::string p = "block" + std::to_string(b) + "/layer" + std::to_string(l);
      Act h = bn_relu(net, x, p + "/bn1", train);
      h = naive_conv2d(h, param(net, p + "/conv1x1/weight"), 4 * k, 1, 1, 0);
      h = bn_relu(net, h, p + "/bn2", train);
      h = naive_conv2d(h, param(net, p + "/conv3x3/weight"), k, 3, 1, 1);
      x = naive_concat(x, h);
    }
    if (b == s.num_blocks) break;
    const std::string t = "transition" + std::to_string(b);
    Act h = bn_relu(net, x, t + "/bn", train);
    h = naive_avg_pool2(naive_conv2d(h, param(net, t + "/conv1x1/weight"), k0, 1, 1, 0));
    if (s.residual) {
      const Act skip = naive_avg_pool2(block_in);
      for (std::size_t i = 0; i < h.v.size(); ++i) h.v[i] += skip.v[i];
    }
    x = h;
  }
  x = naive_global_pool(bn_relu(net, x, "head/bn", train));
  return naive_linear(x, param(net, "head/fc/weight"), param(net, "head/fc/bias"), s.num_classes);
}

std::uint64_t enumerate_params(const ArchSpec& s) {
  const std::uint64_t k = s.growth_rate, k0 = 4 * k, bottleneck = 4 * k;
  std::uint64_t total = 0;
  // Stem 3x3 convolution.
  total += k0 * s.input_channels * 3 * 3;
  for (std::uint64_t b = 0; b < s.num_blocks; ++b) {
    std::uint64_t c = k0;
    for (std::uint64_t l = 0; l < s.layers_per_block; ++l) {
      total += 2 * c;                      // bn1 gamma, beta
      total += bottleneck * c;             // conv1x1 [4k, c, 1, 1]
      total += 2 * bottleneck;             // bn2
      total += k * bottleneck * 3 * 3;     // conv3x3 [k, 4k, 3, 3]
      c += k;
    }
    if (b + 1 < s.num_blocks) {
      total += 2 * c;                      // transition bn
      total += k0 * c;                     // transition conv1x1 [4k, c, 1, 1]
    }
  }
  const std::uint64_t features = k0 + s.layers_per_block * k;
  total += 2 * features;                   // head bn
  total += s.num_classes * features + s.num_classes;  // fc weight and bias
  return total;
}

double naive_cross_entropy(const std::vector<double>& logits, std::size_t classes,
                           const std::vector<int>& labels) {
  double total = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    double denom = 0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(logits[n * classes + c]);
    total += std::log(denom) - logits[n * classes + labels[n]];
  }
  return total / static_cast<double>(labels.size());
}

double relative_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

GradCheck finite_difference_check(const std::function<double()>& loss, Tensor<double>& param,
                                  const Tensor<double>& analytic, double step,
                                  std::size_t max_elements, std::uint64_t sample_seed,
                                  double tolerance) {
  GradCheck out;
  std::vector<std::size_t> indices(param.numel());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  if (max_elements && indices.size() > max_elements) {
    std::mt19937_64 rng(sample_seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(max_elements);
  }
  for (std::size_t i : indices) {
    const double saved = param[i];
    auto at = [&](double delta) {
      param[i] = saved + delta;
      const double v = loss();
      param[i] = saved;
      return v;
    };
    const double up = at(step), down = at(-step);
    const double a = analytic.empty() ? 0.0 : analytic[i];
    double err = relative_error(a, (up - down) / (2 * step));
    if (err > tolerance) {
      const double f0 = at(0.0);
      const double right = (-3 * f0 + 4 * at(step / 2) - up) / step;
      const double left = (3 * f0 - 4 * at(-step / 2) + down) / step;
      if (relative_error(left, right) > tolerance) {
        err = std::min(relative_error(a, left), relative_error(a, right));
        ++out.kinked;
      }
    }
    if (err > out.max_rel_error) {
      out.max_rel_error = err;
      out.worst_index = i;
    }
    ++out.checked;
  }
  return out;
}

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

ArchSpec tiny_spec() {
  ArchSpec s;
  s.name = "tiny";
  s.growth_rate = 4;
  s.layers_per_block = 2;
  s.num_blocks = 2;
  s.input_channels = 1;
  s.input_height = 16;
  s.input_width = 16;
  s.num_classes = 10;
  return s;
}

}  // namespace rdense::testing
