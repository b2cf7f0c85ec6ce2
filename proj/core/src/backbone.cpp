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

#include "erasehash/backbone.hpp"

#include <cmath>
#include <random>

#include "erasehash/errors.hpp"
#include "erasehash/ops.hpp"
#include "erasehash/random.hpp"
#include "json.hpp"

namespace erasehash {
namespace {

using nlohmann::json;

bool pooled(const Architecture& arch, std::size_t stage) {
  return arch.max_pool && arch.strides[stage] == 2;
}

ops::Conv2dGeometry stage_geometry(const Architecture& arch, std::size_t stage) {
  return {pooled(arch, stage) ? std::size_t{1} : arch.strides[stage], arch.kernel / 2};
}

}  // namespace

void Architecture::validate() const {
  if (in_channels == 0) throw ConfigError("architecture: in_channels must be >= 1");
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("architecture: kernel must be odd");
  if (channels.empty()) throw ConfigError("architecture: at least one stage required");
  if (channels.size() != strides.size())
    throw ConfigError("architecture: channels and strides differ in length");
  for (std::size_t c : channels)
    if (c == 0) throw ConfigError("architecture: stage channels must be >= 1");
  for (std::size_t s : strides) {
    if (s == 0) throw ConfigError("architecture: strides must be >= 1");
    if (max_pool && s > 2) throw ConfigError("architecture: pooled strides must be 1 or 2");
  }
  if (!std::isfinite(input_shift)) throw ConfigError("architecture: input_shift must be finite");
  if (!(input_scale > 0.0) || !std::isfinite(input_scale))
    throw ConfigError("architecture: input_scale must be positive");
  try {
    (void)feature_shape();
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("architecture: ") + e.what());
  }
}

Shape Architecture::feature_shape() const {
  Shape shape{in_channels, height, width};
  std::size_t prev = in_channels;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    shape = ops::conv2d_output_shape(shape, {channels[i], prev, kernel, kernel},
                                     stage_geometry(*this, i));
    if (pooled(*this, i)) {
      if (shape[1] < 2 || shape[2] < 2)
        throw DimensionError("pooled stage input smaller than 2x2");
      shape = {shape[0], shape[1] / 2, shape[2] / 2};
    }
    prev = channels[i];
  }
  return shape;
}

std::string Architecture::to_json() const {
  return json{{"in_channels", in_channels}, {"height", height}, {"width", width},
              {"kernel", kernel},           {"channels", channels},
              {"strides", strides},         {"input_shift", input_shift},
              {"input_scale", input_scale}, {"max_pool", max_pool}}
      .dump();
}

Architecture Architecture::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Architecture a;
    a.in_channels = j.at("in_channels").get<std::size_t>();
    a.height = j.at("height").get<std::size_t>();
    a.width = j.at("width").get<std::size_t>();
    a.kernel = j.at("kernel").get<std::size_t>();
    a.channels = j.at("channels").get<std::vector<std::size_t>>();
    a.strides = j.at("strides").get<std::vector<std::size_t>>();
    a.input_shift = j.at("input_shift").get<double>();
    a.input_scale = j.at("input_scale").get<double>();
    a.max_pool = j.at("max_pool").get<bool>();
    a.validate();
    return a;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("architecture: ") + e.what());
  }
}

std::vector<Tensor*> BackboneParams::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    out.push_back(&kernels[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

void BackboneParams::zero_grad() {
  for (Tensor* p : parameters()) p->ensure_grad().zero_grad();
}

BackboneParams init_backbone(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  BackboneParams params;
  params.arch = arch;
  std::size_t prev = arch.in_channels;
  for (std::size_t c : arch.channels) {
    const std::size_t fan_in = prev * arch.kernel * arch.kernel;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor k({c, prev, arch.kernel, arch.kernel});
    for (double& v : k.values()) v = dist(rng);
    params.kernels.push_back(std::move(k));
    params.biases.emplace_back(Shape{c});
    prev = c;
  }
  return params;
}

BackboneTrace backbone_forward(const Tensor& image, const BackboneParams& params) {
  const Architecture& arch = params.arch;
  require_shape(image, {arch.in_channels, arch.height, arch.width}, "backbone input");
  BackboneTrace trace;
  Tensor current = image;
  for (double& v : current.values()) v = (v - arch.input_shift) * arch.input_scale;
  for (std::size_t i = 0; i < arch.stages(); ++i) {
    Tensor pre = ops::conv2d(current, params.kernels[i], params.biases[i],
                             stage_geometry(arch, i));
    Tensor post = ops::relu_act(pre);
    trace.stage_inputs.push_back(std::move(current));
    trace.pre_activations.push_back(std::move(pre));
    if (pooled(arch, i)) {
      current = ops::maxpool2(post);
      trace.pool_inputs.push_back(std::move(post));
    } else {
      current = std::move(post);
      trace.pool_inputs.emplace_back();
    }
  }
  trace.embedding = ops::global_avg_pool(current);
  trace.feature_map = std::move(current);
  return trace;
}

void backbone_backward(BackboneTrace& trace, std::span<const double> grad_embedding,
                       BackboneParams& params, Tensor* input_grad) {
  const Architecture& arch = params.arch;
  for (Tensor* p : params.parameters()) p->ensure_grad();

  trace.feature_map.ensure_grad().zero_grad();
  ops::global_avg_pool_backward(grad_embedding, trace.feature_map);
  std::vector<double> upstream(trace.feature_map.grad().begin(),
                               trace.feature_map.grad().end());

  for (std::size_t i = arch.stages(); i-- > 0;) {
    if (pooled(arch, i)) {
      Tensor& pool_input = trace.pool_inputs[i];
      pool_input.ensure_grad().zero_grad();
      ops::maxpool2_backward(upstream, pool_input);
      upstream.assign(pool_input.grad().begin(), pool_input.grad().end());
    }
    Tensor& pre = trace.pre_activations[i];
    pre.ensure_grad().zero_grad();
    ops::relu_backward(upstream, pre);

    Tensor& input = trace.stage_inputs[i];
    const bool need_input = i > 0 || input_grad != nullptr;
    if (need_input) input.ensure_grad().zero_grad();
    else input.drop_grad();
    ops::conv2d_backward(pre.grad(), input, params.kernels[i], params.biases[i],
                         stage_geometry(arch, i));
    if (need_input) upstream.assign(input.grad().begin(), input.grad().end());
  }
  if (input_grad) {
    for (double& g : upstream) g *= arch.input_scale;
    *input_grad = Tensor(trace.stage_inputs[0].shape(), upstream);
  }
}

Extraction extract(const Tensor& image, const BackboneParams& params,
                   std::size_t image_id) {
  BackboneTrace trace = backbone_forward(image, params);
  return {FeatureMap{std::move(trace.feature_map), image_id}, std::move(trace.embedding)};
}

}  // namespace erasehash
