// Copyright 2026 The erasehash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace erasehash {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles with an optional gradient buffer of the
// same length. The gradient buffer is absent until ensure_grad() is called;
// backward functions only accumulate into operands that carry one.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Row-major accessors for rank-2 and rank-3 tensors; unchecked.
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  bool has_grad() const { return grad_.size() == data_.size() && !data_.empty(); }
  // Allocates a zeroed gradient buffer if none exists.
  Tensor& ensure_grad();
  void zero_grad();
  void drop_grad();
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }
  // Copy of the gradient as a tensor of the same shape.
  Tensor grad_tensor() const;

  // Same data viewed under another shape with the same element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;

  // Shape and values; gradients are ignored.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
};

// Throws DimensionError when `t` does not have exactly `expected` shape.
void require_shape(const Tensor& t, const Shape& expected, const char* what);
void require_rank(const Tensor& t, std::size_t rank, const char* what);

}  // namespace erasehash
