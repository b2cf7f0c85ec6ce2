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
#include <filesystem>
#include <utility>
#include <vector>

#include "erasehash/backbone.hpp"
#include "erasehash/tensor.hpp"

namespace erasehash {

// Attention normalised into [epsilon, 1 + epsilon].
struct AttentionMask {
  Tensor values;  // [h x w]
  double epsilon = 1e-6;
};

// {0,1} erase mask together with the anchors that produced it.
struct BinaryMask {
  Tensor values;  // [h x w]
  std::vector<std::pair<std::size_t, std::size_t>> anchors;  // (y, x)
};

struct EraserConfig {
  std::size_t count = 8;  // number of erasers
  std::size_t size = 5;   // side length of each square eraser
  double epsilon = 1e-6;
};

// Per-pixel mean over channels: [c x h x w] -> [h x w].
Tensor channel_mean(const FeatureMap& map);

// (a - min) / (max - min) + epsilon; a constant map becomes all epsilon.
AttentionMask normalize_mask(const Tensor& attention, double epsilon);

// Picks the `count` largest mask values (descending, ties in row-major
// order) and zeroes the size x size block whose top-left corner sits on
// each pick. Blocks are stamped on a copy padded by `size` on the right and
// bottom and cropped back, so blocks near the border are clipped.
BinaryMask select_erase(const AttentionMask& mask, std::size_t count, std::size_t size);

// Multiplies every channel of image [c x h x w] by the [h x w] mask.
Tensor apply_mask(const Tensor& image, const BinaryMask& mask);

struct Erasure {
  Tensor erased;
  AttentionMask attention;
  BinaryMask mask;
  // True when the attention was flat and the erasers would blank the image.
  bool skipped = false;
};

// channel_mean -> bilinear resize to the image size -> normalize_mask ->
// select_erase -> apply_mask. The mask is plain data: nothing here takes
// part in backpropagation.
Erasure erase_with_attention(const Tensor& image, const FeatureMap& map,
                             const EraserConfig& config);

Tensor make_erased(const Tensor& image, const FeatureMap& map,
                   const EraserConfig& config);

// Debug output: binary PGM (P5) of a [h x w] map scaled from [0, 1] to
// [0, 255], and a JSON list of anchors.
void write_mask_pgm(const std::filesystem::path& path, const Tensor& mask);
void write_anchor_json(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace erasehash
