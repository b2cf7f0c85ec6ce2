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

#include "erasehash/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "erasehash/errors.hpp"

namespace erasehash {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + shape_string(shape_) +
                         " does not match " + std::to_string(data_.size()) +
                         " values");
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + shape_string(shape_));
  }
  return shape_[axis];
}

Tensor& Tensor::ensure_grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
  return *this;
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

void Tensor::drop_grad() {
  grad_.clear();
  grad_.shrink_to_fit();
}

Tensor Tensor::grad_tensor() const {
  if (!has_grad()) return Tensor(shape_);
  return Tensor(shape_, grad_);
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected shape " +
                         shape_string(expected) + ", got " +
                         shape_string(t.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " +
                         std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
  }
}

}  // namespace erasehash
