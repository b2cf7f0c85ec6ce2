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

#include "erasehash/sgd.hpp"

#include <cmath>
#include <string>

#include "erasehash/errors.hpp"

namespace erasehash {

SgdState make_sgd_state(std::span<Tensor* const> params, double learning_rate,
                        double momentum, double weight_decay) {
  if (!(learning_rate >= 0.0)) {
    throw ConfigError("sgd: learning_rate must be non-negative");
  }
  SgdState state;
  state.momentum = momentum;
  state.weight_decay = weight_decay;
  state.learning_rate = learning_rate;
  state.velocity.reserve(params.size());
  for (const Tensor* p : params) state.velocity.emplace_back(p->size(), 0.0);
  return state;
}

void sgd_step(std::span<Tensor* const> params, SgdState& state) {
  if (params.size() != state.velocity.size()) {
    throw DimensionError("sgd_step: " + std::to_string(params.size()) +
                         " parameters but " +
                         std::to_string(state.velocity.size()) +
                         " velocity buffers");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (state.velocity[t].size() != params[t]->size()) {
      throw DimensionError("sgd_step: velocity " + std::to_string(t) +
                           " does not match parameter shape " +
                           shape_string(params[t]->shape()));
    }
  }
  double grad_scale = 1.0;
  if (state.clip_norm > 0.0) {
    double squared = 0.0;
    for (const Tensor* p : params)
      if (p->has_grad())
        for (double g : p->grad()) squared += g * g;
    const double norm = std::sqrt(squared);
    if (norm > state.clip_norm) grad_scale = state.clip_norm / norm;
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = *params[t];
    std::vector<double>& v = state.velocity[t];
    const bool has_grad = p.has_grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g =
          (has_grad ? grad_scale * p.grad()[i] : 0.0) + state.weight_decay * p[i];
      v[i] = state.momentum * v[i] + g;
      p[i] -= state.learning_rate * v[i];
    }
  }
}

}  // namespace erasehash
