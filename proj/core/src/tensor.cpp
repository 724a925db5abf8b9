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

#include "rdense/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "rdense/error.hpp"

namespace rdense {

std::size_t Shape::numel() const {
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string Shape::str() const {
  std::string out = "[";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(dims_[i]);
  }
  return out + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_.numel(), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_.numel()) {
    throw DimensionError("tensor of shape " + shape_.str() + " needs " +
                         std::to_string(shape_.numel()) + " elements, got " +
                         std::to_string(data_.size()));
  }
}

template <typename T>
T& Tensor<T>::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

template <typename T>
const T& Tensor<T>::at(std::size_t n, std::size_t c, std::size_t h,
                       std::size_t w) const {
  return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape.numel() != numel()) {
    throw DimensionError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  return Tensor(std::move(shape), data_);
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t begin,
                         std::size_t count) {
  if (x.shape().rank() != 4 || begin + count > x.dim(1)) {
    throw DimensionError("channel slice [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         x.shape().str());
  }
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<T> out(Shape{n, count, x.dim(2), x.dim(3)});
  for (std::size_t i = 0; i < n; ++i) {
    const T* src = x.ptr() + (i * c + begin) * hw;
    std::copy(src, src + count * hw, out.ptr() + i * count * hw);
  }
  return out;
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> slice_channels(const Tensor<float>&, std::size_t, std::size_t);
template Tensor<double> slice_channels(const Tensor<double>&, std::size_t, std::size_t);

}  // namespace rdense
