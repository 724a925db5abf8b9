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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rdense {

/// Ordered list of dimension extents. The empty shape denotes a scalar.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims) : dims_(dims) {}
  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  std::size_t numel() const;
  std::span<const std::size_t> dims() const { return dims_; }

  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

/// Dense row-major array. Element count always equals shape().numel().
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// NCHW element access.
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w);
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  void fill(T value);
  bool all_finite() const;

  /// Same elements under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// Channels [begin, begin + count) of an NCHW tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t begin, std::size_t count);

/// Element-type conversion.
template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& x) {
  std::vector<To> out(x.data().begin(), x.data().end());
  return Tensor<To>(x.shape(), std::move(out));
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace rdense
