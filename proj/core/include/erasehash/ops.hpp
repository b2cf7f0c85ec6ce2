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

#include "erasehash/tensor.hpp"

// Forward/backward pairs for the fixed set of differentiable operations the
// network needs. Every *_backward takes the upstream gradient as a flat span
// laid out like the forward output and accumulates (+=) into the grad buffer
// of each operand that has one (see Tensor::ensure_grad).
namespace erasehash::ops {

// [r x c] * [c x d] -> [r x d]
Tensor matmul(const Tensor& a, const Tensor& b);
void matmul_backward(std::span<const double> grad_out, Tensor& a, Tensor& b);

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

// Cross-correlation of x [c_in x h x w] with kernels [c_out x c_in x s x s].
// `bias` is either empty or [c_out].
Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias,
              Conv2dGeometry geometry);
void conv2d_backward(std::span<const double> grad_out, Tensor& x,
                     Tensor& kernels, Tensor& bias, Conv2dGeometry geometry);
Shape conv2d_output_shape(const Shape& input, const Shape& kernels,
                          Conv2dGeometry geometry);

// [c x h x w] -> [c]
Tensor global_avg_pool(const Tensor& a);
void global_avg_pool_backward(std::span<const double> grad_out, Tensor& a);

Tensor tanh_act(const Tensor& x);
// Uses the forward output `y` since tanh' = 1 - y^2.
void tanh_backward(std::span<const double> grad_out, const Tensor& y,
                   Tensor& x);

Tensor relu_act(const Tensor& x);
void relu_backward(std::span<const double> grad_out, Tensor& x);

// 2x2 window with stride 2; odd sizes round down. [c x h x w] -> [c x h/2 x w/2]
Tensor maxpool2(const Tensor& x);
void maxpool2_backward(std::span<const double> grad_out, Tensor& x);

// Align-corners bilinear interpolation of a [h' x w'] map to [h x w].
Tensor bilinear_resize(const Tensor& a, std::size_t height, std::size_t width);

}  // namespace erasehash::ops
