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

#include "erasehash/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "erasehash/errors.hpp"
#include "erasehash/ops.hpp"
#include "erasehash/serialize.hpp"
#include "json.hpp"

namespace erasehash {

Tensor channel_mean(const FeatureMap& map) {
  const Tensor& a = map.activations;
  require_rank(a, 3, "channel_mean");
  const std::size_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (c == 0) throw DimensionError("channel_mean: feature map has no channels");
  Tensor out({h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h * w; ++i) out[i] += a[ch * h * w + i];
  for (double& v : out.values()) v /= static_cast<double>(c);
  return out;
}

AttentionMask normalize_mask(const Tensor& attention, double epsilon) {
  require_rank(attention, 2, "normalize_mask");
  if (attention.empty()) throw DimensionError("normalize_mask: empty attention map");
  const auto [lo, hi] = std::minmax_element(attention.values().begin(),
                                            attention.values().end());
  const double min = *lo, range = *hi - *lo;
  AttentionMask mask{Tensor(attention.shape(), epsilon), epsilon};
  if (range > 0.0) {
    for (std::size_t i = 0; i < attention.size(); ++i)
      mask.values[i] = (attention[i] - min) / range + epsilon;
  }
  return mask;
}

BinaryMask select_erase(const AttentionMask& mask, std::size_t count, std::size_t size) {
  const Tensor& m = mask.values;
  require_rank(m, 2, "select_erase");
  const std::size_t h = m.dim(0), w = m.dim(1);
  if (size < 1 || size > std::min(h, w)) {
    throw ConfigError("select_erase: eraser size " + std::to_string(size) +
                      " must lie in [1, " + std::to_string(std::min(h, w)) + "]");
  }
  if (count < 1 || count > h * w) {
    throw ConfigError("select_erase: eraser count " + std::to_string(count) +
                      " must lie in [1, " + std::to_string(h * w) + "]");
  }

  std::vector<std::size_t> order(h * w);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count),
                    order.end(), [&m](std::size_t a, std::size_t b) {
                      return m[a] > m[b] || (m[a] == m[b] && a < b);
                    });

  const std::size_t ph = h + size, pw = w + size;
  std::vector<std::uint8_t> padded(ph * pw, 1);
  BinaryMask out;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t y = order[s] / w, x = order[s] % w;
    out.anchors.emplace_back(y, x);
    for (std::size_t dy = 0; dy < size; ++dy)
      for (std::size_t dx = 0; dx < size; ++dx) padded[(y + dy) * pw + x + dx] = 0;
  }
  out.values = Tensor({h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out.values.at(y, x) = padded[y * pw + x];
  return out;
}

Tensor apply_mask(const Tensor& image, const BinaryMask& mask) {
  require_rank(image, 3, "apply_mask image");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  require_shape(mask.values, {h, w}, "apply_mask mask");
  Tensor out(image.shape());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h * w; ++i)
      out[ch * h * w + i] = image[ch * h * w + i] * mask.values[i];
  return out;
}

Erasure erase_with_attention(const Tensor& image, const FeatureMap& map,
                             const EraserConfig& config) {
  require_rank(image, 3, "make_erased image");
  const std::size_t h = image.dim(1), w = image.dim(2);
  const Tensor coarse = channel_mean(map);
  const Tensor resized = ops::bilinear_resize(coarse, h, w);

  Erasure result;
  result.attention = normalize_mask(resized, config.epsilon);
  const auto [lo, hi] = std::minmax_element(resized.values().begin(), resized.values().end());
  const bool flat = *lo == *hi;
  if (flat && config.count * config.size * config.size >= h * w) {
    // Validate the eraser parameters even though nothing is erased.
    (void)select_erase(result.attention, config.count, config.size);
    result.mask.values = Tensor({h, w}, 1.0);
    result.erased = image;
    result.skipped = true;
    return result;
  }
  result.mask = select_erase(result.attention, config.count, config.size);
  result.erased = apply_mask(image, result.mask);
  return result;
}

Tensor make_erased(const Tensor& image, const FeatureMap& map, const EraserConfig& config) {
  return erase_with_attention(image, map, config).erased;
}

void write_mask_pgm(const std::filesystem::path& path, const Tensor& mask) {
  require_rank(mask, 2, "write_mask_pgm");
  const std::string header = "P5\n" + std::to_string(mask.dim(1)) + " " +
                             std::to_string(mask.dim(0)) + "\n255\n";
  ByteWriter out;
  out.text(header);
  for (double v : mask.values())
    out.u8(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  write_file(path, out.bytes());
}

void write_anchor_json(const std::filesystem::path& path, const BinaryMask& mask) {
  nlohmann::json anchors = nlohmann::json::array();
  for (const auto& [y, x] : mask.anchors) anchors.push_back({{"y", y}, {"x", x}});
  write_text_file(path, nlohmann::json{{"anchors", anchors}}.dump(2) + "\n");
}

}  // namespace erasehash
