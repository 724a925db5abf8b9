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

#include "rdense/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rdense/error.hpp"

namespace rdense {

// ParamStore ---------------------------------------------------------------

template <typename T>
void ParamStore<T>::claim(const std::string& path) {
  if (param_index_.count(path) || buffer_index_.count(path)) {
    throw ConfigError("duplicate parameter path '" + path + "'");
  }
}

template <typename T>
void ParamStore<T>::add_parameter(std::string path, Var<T> var, bool weight_decay) {
  claim(path);
  param_index_.emplace(path, params_.size());
  Tensor<T> velocity(var.shape());
  params_.push_back(Parameter<T>{std::move(path), std::move(var), std::move(velocity), weight_decay});
}

template <typename T>
void ParamStore<T>::add_buffer(std::string path, Var<T> var) {
  claim(path);
  buffer_index_.emplace(path, buffers_.size());
  buffers_.push_back(Buffer<T>{std::move(path), std::move(var)});
}

template <typename T>
Parameter<T>* ParamStore<T>::find(std::string_view path) {
  auto it = param_index_.find(std::string(path));
  return it == param_index_.end() ? nullptr : &params_[it->second];
}

template <typename T>
const Parameter<T>* ParamStore<T>::find(std::string_view path) const {
  auto it = param_index_.find(std::string(path));
  return it == param_index_.end() ? nullptr : &params_[it->second];
}

template <typename T>
Buffer<T>* ParamStore<T>::find_buffer(std::string_view path) {
  auto it = buffer_index_.find(std::string(path));
  return it == buffer_index_.end() ? nullptr : &buffers_[it->second];
}

template <typename T>
std::size_t ParamStore<T>::parameter_count() const {
  std::size_t total = 0;
  for (const Parameter<T>& p : params_) total += p.var.value().numel();
  return total;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (Parameter<T>& p : params_) p.var.clear_grad();
}

template <typename T>
bool ParamStore<T>::any_grad() const {
  return std::any_of(params_.begin(), params_.end(),
                     [](const Parameter<T>& p) { return p.var.has_grad(); });
}

// Network ------------------------------------------------------------------

template <typename T>
Network<T> Network<T>::build(const ArchSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.construct(spec, seed);
  return net;
}

template <typename T>
void Network<T>::construct(const ArchSpec& spec, std::uint64_t seed) {
  spec_ = spec;
  std::mt19937_64 rng(seed);

  auto conv = [&](const std::string& path, std::size_t c_out, std::size_t c_in,
                  std::size_t kernel) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(kernel * kernel * c_out));
    std::normal_distribution<double> dist(0.0, stddev);
    Tensor<T> w(Shape{c_out, c_in, kernel, kernel});
    for (T& v : w.data()) v = static_cast<T>(dist(rng));
    Var<T> var = Var<T>::leaf(std::move(w), true);
    params_.add_parameter(path + "/weight", var, true);
    return var;
  };
  auto batchnorm = [&](const std::string& path, std::size_t channels) {
    BatchNorm<T> bn = BatchNorm<T>::create(channels);
    params_.add_parameter(path + "/gamma", bn.gamma, false);
    params_.add_parameter(path + "/beta", bn.beta, false);
    params_.add_buffer(path + "/running_mean", bn.running_mean);
    params_.add_buffer(path + "/running_var", bn.running_var);
    return bn;
  };

  const std::size_t k = spec.growth_rate;
  const std::size_t k0 = spec.block_input_channels();
  const std::size_t bottleneck = spec.bottleneck_channels();

  stem_conv_ = conv("stem/conv3x3", k0, spec.input_channels, 3);
  blocks_.clear();
  for (std::size_t b = 0; b < spec.num_blocks; ++b) {
    Block block;
    std::size_t channels = k0;
    for (std::size_t l = 0; l < spec.layers_per_block; ++l) {
      const std::string path =
          "block" + std::to_string(b + 1) + "/layer" + std::to_string(l + 1);
      DenseLayer layer;
      layer.bn1 = batchnorm(path + "/bn1", channels);
      layer.conv1x1 = conv(path + "/conv1x1", bottleneck, channels, 1);
      layer.bn2 = batchnorm(path + "/bn2", bottleneck);
      layer.conv3x3 = conv(path + "/conv3x3", k, bottleneck, 3);
      block.layers.push_back(std::move(layer));
      channels += k;
    }
    if (b + 1 < spec.num_blocks) {
      const std::string path = "transition" + std::to_string(b + 1);
      Transition t;
      t.bn = batchnorm(path + "/bn", channels);
      t.conv1x1 = conv(path + "/conv1x1", k0, channels, 1);
      block.transition = std::move(t);
    }
    blocks_.push_back(std::move(block));
  }

  const std::size_t features = spec.block_output_channels();
  head_bn_ = batchnorm("head/bn", features);
  std::normal_distribution<double> dist(0.0, 0.01);
  Tensor<T> w(Shape{spec.num_classes, features});
  for (T& v : w.data()) v = static_cast<T>(dist(rng));
  fc_weight_ = Var<T>::leaf(std::move(w), true);
  fc_bias_ = Var<T>::leaf(Tensor<T>(Shape{spec.num_classes}), true);
  params_.add_parameter("head/fc/weight", fc_weight_, true);
  params_.add_parameter("head/fc/bias", fc_bias_, false);
}

template <typename T>
void Network<T>::copy_state_from(const Network& other) {
  auto src_params = other.params_.parameters();
  auto dst_params = params_.parameters();
  auto src_buffers = other.params_.buffers();
  auto dst_buffers = params_.buffers();
  if (src_params.size() != dst_params.size() || src_buffers.size() != dst_buffers.size()) {
    throw ConfigError("copy_state_from: parameter layouts differ");
  }
  for (std::size_t i = 0; i < dst_params.size(); ++i) {
    if (src_params[i].path != dst_params[i].path ||
        src_params[i].var.shape() != dst_params[i].var.shape()) {
      throw ConfigError("copy_state_from: '" + src_params[i].path + "' " +
                        src_params[i].var.shape().str() + " does not match '" +
                        dst_params[i].path + "' " + dst_params[i].var.shape().str());
    }
    dst_params[i].var.mutable_value() = src_params[i].var.value();
    dst_params[i].velocity = src_params[i].velocity;
  }
  for (std::size_t i = 0; i < dst_buffers.size(); ++i) {
    dst_buffers[i].var.mutable_value() = src_buffers[i].var.value();
  }
}

template <typename T>
Network<T> Network<T>::clone() const {
  return clone_with_residual(spec_.residual);
}

template <typename T>
Network<T> Network<T>::clone_with_residual(bool residual) const {
  ArchSpec spec = spec_;
  spec.residual = residual;
  if (residual != spec_.residual) {
    const std::string_view from = residual ? "pdense-" : "rdense-";
    if (spec.name.starts_with(from)) {
      spec.name.replace(0, from.size(), residual ? "rdense-" : "pdense-");
    }
  }
  Network net;
  net.construct(spec, 0);
  net.bn_options_ = bn_options_;
  net.copy_state_from(*this);
  return net;
}

template <typename T>
Var<T> Network<T>::stem(Tape<T>& tape, const Var<T>& x) {
  Var<T> y = ops::conv2d(tape, x, stem_conv_, spec_.stem_stride, 1);
  return ops::avg_pool2(tape, y);
}

template <typename T>
Var<T> Network<T>::dense_block(Tape<T>& tape, const Var<T>& x, std::size_t block, Mode mode) {
  Block& b = blocks_.at(block);
  Var<T> features = x;
  for (DenseLayer& layer : b.layers) {
    Var<T> h = ops::relu(tape, ops::batchnorm(tape, features, layer.bn1, mode, bn_options_));
    h = ops::conv2d(tape, h, layer.conv1x1, 1, 0);
    h = ops::relu(tape, ops::batchnorm(tape, h, layer.bn2, mode, bn_options_));
    h = ops::conv2d(tape, h, layer.conv3x3, 1, 1);
    const Var<T> parts[] = {features, h};
    features = ops::concat_channels<T>(tape, parts);
  }
  return features;
}

template <typename T>
Var<T> Network<T>::transition(Tape<T>& tape, const Var<T>& x, Transition& t, Mode mode) {
  Var<T> h = ops::relu(tape, ops::batchnorm(tape, x, t.bn, mode, bn_options_));
  h = ops::conv2d(tape, h, t.conv1x1, 1, 0);
  return ops::avg_pool2(tape, h);
}

template <typename T>
Var<T> Network<T>::residual_dense_block(Tape<T>& tape, const Var<T>& x, std::size_t block,
                                        Mode mode) {
  Block& b = blocks_.at(block);
  if (!b.transition) {
    throw ConfigError("block " + std::to_string(block + 1) +
                      " is the final block and has no transition");
  }
  const std::size_t k0 = spec_.block_input_channels();
  if (x.shape().rank() != 4 || x.shape()[1] != k0) {
    throw ConfigError("residual dense block expects " + std::to_string(k0) +
                      " input channels so the skip sum is defined, got " + x.shape().str());
  }
  Var<T> h = transition(tape, dense_block(tape, x, block, mode), *b.transition, mode);
  if (!spec_.residual) return h;
  return ops::add(tape, h, ops::avg_pool2(tape, x));
}

template <typename T>
Var<T> Network<T>::forward(Tape<T>& tape, const Var<T>& batch, Mode mode) {
  const Shape& s = batch.shape();
  if (s.rank() != 4 || s[1] != spec_.input_channels || s[2] != spec_.input_height ||
      s[3] != spec_.input_width) {
    throw DimensionError("network " + spec_.name + " expects input [N x " +
                         std::to_string(spec_.input_channels) + "x" +
                         std::to_string(spec_.input_height) + "x" +
                         std::to_string(spec_.input_width) + "], got " + s.str());
  }
  Var<T> x = stem(tape, batch);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    x = blocks_[b].transition ? residual_dense_block(tape, x, b, mode)
                              : dense_block(tape, x, b, mode);
  }
  x = ops::relu(tape, ops::batchnorm(tape, x, head_bn_, mode, bn_options_));
  x = ops::global_avg_pool(tape, x);
  return ops::linear(tape, x, fc_weight_, fc_bias_);
}

template <typename T>
Var<T> Network<T>::forward(Tape<T>& tape, const Tensor<T>& batch, Mode mode) {
  return forward(tape, Var<T>::leaf(batch), mode);
}

template class ParamStore<float>;
template class ParamStore<double>;
template class Network<float>;
template class Network<double>;

}  // namespace rdense
