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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "erasehash/tensor.hpp"

namespace erasehash {

// Plain convolutional feature extractor: each stage is a square convolution
// (padding kernel/2) followed by ReLU; the last stage's activations are the
// feature map A and their global average the embedding z.
//
// Pixels are standardised as (x - input_shift) * input_scale before the first
// stage. Without normalisation layers, the positive mean of raw [0, 1] pixels
// otherwise dominates every activation and the net barely trains.
struct Architecture {
  std::size_t in_channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t kernel = 3;
  std::vector<std::size_t> channels{16, 32, 64};
  std::vector<std::size_t> strides{2, 2, 2};
  double input_shift = 0.5;
  double input_scale = 4.0;
  // When set, a stage with stride 2 convolves at stride 1 and downsamples
  // with 2x2 max pooling after the ReLU instead of striding the convolution.
  bool max_pool = false;

  void validate() const;
  std::size_t stages() const { return channels.size(); }
  // [c' x h' x w'] of the last stage for the configured input size.
  Shape feature_shape() const;
  std::size_t embedding_size() const { return channels.back(); }

  std::string to_json() const;
  static Architecture from_json(const std::string& text);

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct BackboneParams {
  Architecture arch;
  std::vector<Tensor> kernels;  // [c_out x c_in x s x s] per stage
  std::vector<Tensor> biases;   // [c_out] per stage

  std::vector<Tensor*> parameters();
  void zero_grad();

  friend bool operator==(const BackboneParams&, const BackboneParams&) = default;
};

// Fan-in scaled (Kaiming normal) kernels, zero biases.
BackboneParams init_backbone(const Architecture& arch, std::uint64_t seed);

struct FeatureMap {
  Tensor activations;  // [c' x h' x w']
  std::size_t image_id = 0;
};

// Everything the backward pass needs from one forward pass.
struct BackboneTrace {
  std::vector<Tensor> stage_inputs;
  std::vector<Tensor> pre_activations;
  std::vector<Tensor> pool_inputs;  // post-ReLU maps of pooled stages
  Tensor feature_map;
  Tensor embedding;
};

BackboneTrace backbone_forward(const Tensor& image, const BackboneParams& params);

// Accumulates d(loss)/d(params) given d(loss)/d(embedding). When
// `input_grad` is non-null it receives d(loss)/d(image) (overwritten).
void backbone_backward(BackboneTrace& trace, std::span<const double> grad_embedding,
                       BackboneParams& params, Tensor* input_grad = nullptr);

struct Extraction {
  FeatureMap map;
  Tensor embedding;
};

Extraction extract(const Tensor& image, const BackboneParams& params,
                   std::size_t image_id = 0);

}  // namespace erasehash
