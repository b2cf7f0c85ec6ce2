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

#include <span>
#include <vector>

#include "erasehash/tensor.hpp"

namespace erasehash {

// Momentum SGD with coupled weight decay:
//   v <- momentum * v + (g + weight_decay * p)
//   p <- p - learning_rate * v
// When clip_norm > 0, g is first rescaled so that its global L2 norm over all
// parameters does not exceed clip_norm.
struct SgdState {
  std::vector<std::vector<double>> velocity;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double learning_rate = 1e-3;
  double clip_norm = 0.0;
};

SgdState make_sgd_state(std::span<Tensor* const> params, double learning_rate,
                        double momentum, double weight_decay);

// Applies one update using each parameter's grad buffer (a parameter without
// one is treated as having zero gradient). Gradients are left untouched.
void sgd_step(std::span<Tensor* const> params, SgdState& state);

}  // namespace erasehash
