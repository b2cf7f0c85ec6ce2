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

#include "erasehash/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "erasehash/errors.hpp"

namespace erasehash::ops {
namespace {

void require_grad_size(std::span<const double> grad_out, std::size_t expected,
                       const char* what) {
  if (grad_out.size() != expected) {
    throw DimensionError(std::string(what) + ": upstream gradient has " +
                         std::to_string(grad_out.size()) + " values, expected " +
                         std::to_string(expected));
  }
}

// Output positions o with 0 <= o*stride + offset - pad < extent.
struct ValidRange {
  std::size_t begin;
  std::size_t end;
};

ValidRange valid_outputs(std::size_t out_extent, std::size_t in_extent,
                         std::size_t offset, Conv2dGeometry g) {
  // o*stride >= pad - offset
  std::size_t begin = 0;
  if (g.pad > offset) begin = (g.pad - offset + g.stride - 1) / g.stride;
  // o*stride + offset - pad <= in_extent - 1
  const std::size_t limit = in_extent - 1 + g.pad;
  std::size_t end = 0;
  if (limit >= offset) end = std::min(out_extent, (limit - offset) / g.stride + 1);
  if (end < begin) end = begin;
  return {begin, end};
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  const std::size_t rows = a.dim(0), inner = a.dim(1), cols = b.dim(1);
  if (b.dim(0) != inner) {
    throw DimensionError("matmul: inner dimensions disagree " +
                         shape_string(a.shape()) + " * " +
                         shape_string(b.shape()));
  }
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    double* out_row = out.data() + i * cols;
    for (std::size_t p = 0; p < inner; ++p) {
      const double lhs = a.at(i, p);
      const double* b_row = b.data() + p * cols;
      for (std::size_t j = 0; j < cols; ++j) out_row[j] += lhs * b_row[j];
    }
  }
  return out;
}

void matmul_backward(std::span<const double> grad_out, Tensor& a, Tensor& b) {
  const std::size_t rows = a.dim(0), inner = a.dim(1), cols = b.dim(1);
  require_grad_size(grad_out, rows * cols, "matmul_backward");
  if (a.has_grad()) {
    auto ga = a.grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t p = 0; p < inner; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
          acc += grad_out[i * cols + j] * b.at(p, j);
        ga[i * inner + p] += acc;
      }
  }
  if (b.has_grad()) {
    auto gb = b.grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t p = 0; p < inner; ++p) {
        const double lhs = a.at(i, p);
        for (std::size_t j = 0; j < cols; ++j)
          gb[p * cols + j] += lhs * grad_out[i * cols + j];
      }
  }
}

Shape conv2d_output_shape(const Shape& input, const Shape& kernels,
                          Conv2dGeometry g) {
  if (input.size() != 3 || kernels.size() != 4) {
    throw DimensionError("conv2d: expected input [c x h x w] and kernels "
                         "[c_out x c_in x s x s], got " +
                         shape_string(input) + " and " + shape_string(kernels));
  }
  if (kernels[1] != input[0] || kernels[2] != kernels[3]) {
    throw DimensionError("conv2d: kernels " + shape_string(kernels) +
                         " incompatible with input " + shape_string(input));
  }
  if (g.stride == 0) throw DimensionError("conv2d: stride must be positive");
  const std::size_t s = kernels[2];
  if (s == 0 || s > input[1] + 2 * g.pad || s > input[2] + 2 * g.pad) {
    throw DimensionError("conv2d: kernel size " + std::to_string(s) +
                         " yields nonpositive output for input " +
                         shape_string(input));
  }
  return {kernels[0], (input[1] + 2 * g.pad - s) / g.stride + 1,
          (input[2] + 2 * g.pad - s) / g.stride + 1};
}

Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias,
              Conv2dGeometry g) {
  const Shape out_shape = conv2d_output_shape(x.shape(), kernels.shape(), g);
  const std::size_t c_out = out_shape[0], oh = out_shape[1], ow = out_shape[2];
  const std::size_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t s = kernels.dim(2);
  if (!bias.empty()) require_shape(bias, {c_out}, "conv2d bias");

  Tensor out(out_shape);
  for (std::size_t co = 0; co < c_out; ++co) {
    double* plane = out.data() + co * oh * ow;
    if (!bias.empty()) std::fill(plane, plane + oh * ow, bias[co]);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const double* in_plane = x.data() + ci * h * w;
      for (std::size_t ky = 0; ky < s; ++ky) {
        const ValidRange ys = valid_outputs(oh, h, ky, g);
        for (std::size_t kx = 0; kx < s; ++kx) {
          const ValidRange xs = valid_outputs(ow, w, kx, g);
          const double weight = kernels[((co * c_in + ci) * s + ky) * s + kx];
          for (std::size_t oy = ys.begin; oy < ys.end; ++oy) {
            const double* in_row = in_plane + (oy * g.stride + ky - g.pad) * w;
            double* out_row = plane + oy * ow;
            for (std::size_t ox = xs.begin; ox < xs.end; ++ox)
              out_row[ox] += weight * in_row[ox * g.stride + kx - g.pad];
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(std::span<const double> grad_out, Tensor& x,
                     Tensor& kernels, Tensor& bias, Conv2dGeometry g) {
  const Shape out_shape = conv2d_output_shape(x.shape(), kernels.shape(), g);
  const std::size_t c_out = out_shape[0], oh = out_shape[1], ow = out_shape[2];
  const std::size_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t s = kernels.dim(2);
  require_grad_size(grad_out, shape_size(out_shape), "conv2d_backward");

  if (!bias.empty() && bias.has_grad()) {
    auto gb = bias.grad();
    for (std::size_t co = 0; co < c_out; ++co) {
      double acc = 0.0;
      for (std::size_t i = 0; i < oh * ow; ++i) acc += grad_out[co * oh * ow + i];
      gb[co] += acc;
    }
  }
  const bool want_kernels = kernels.has_grad();
  const bool want_input = x.has_grad();
  if (!want_kernels && !want_input) return;

  for (std::size_t co = 0; co < c_out; ++co) {
    const double* g_plane = grad_out.data() + co * oh * ow;
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const double* in_plane = x.data() + ci * h * w;
      double* gx_plane = want_input ? x.grad().data() + ci * h * w : nullptr;
      for (std::size_t ky = 0; ky < s; ++ky) {
        const ValidRange ys = valid_outputs(oh, h, ky, g);
        for (std::size_t kx = 0; kx < s; ++kx) {
          const ValidRange xs = valid_outputs(ow, w, kx, g);
          const std::size_t kidx = ((co * c_in + ci) * s + ky) * s + kx;
          const double weight = kernels[kidx];
          double acc = 0.0;
          for (std::size_t oy = ys.begin; oy < ys.end; ++oy) {
            const std::size_t row = (oy * g.stride + ky - g.pad) * w;
            const double* g_row = g_plane + oy * ow;
            for (std::size_t ox = xs.begin; ox < xs.end; ++ox) {
              const std::size_t idx = row + ox * g.stride + kx - g.pad;
              acc += g_row[ox] * in_plane[idx];
              if (gx_plane) gx_plane[idx] += g_row[ox] * weight;
            }
          }
          if (want_kernels) kernels.grad()[kidx] += acc;
        }
      }
    }
  }
}

Tensor global_avg_pool(const Tensor& a) {
  require_rank(a, 3, "global_avg_pool");
  const std::size_t c = a.dim(0), area = a.dim(1) * a.dim(2);
  if (area == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  Tensor out({c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < area; ++i) acc += a[ch * area + i];
    out[ch] = acc / static_cast<double>(area);
  }
  return out;
}

void global_avg_pool_backward(std::span<const double> grad_out, Tensor& a) {
  const std::size_t c = a.dim(0), area = a.dim(1) * a.dim(2);
  require_grad_size(grad_out, c, "global_avg_pool_backward");
  if (!a.has_grad()) return;
  auto ga = a.grad();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double share = grad_out[ch] / static_cast<double>(area);
    for (std::size_t i = 0; i < area; ++i) ga[ch * area + i] += share;
  }
}

Tensor tanh_act(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

void tanh_backward(std::span<const double> grad_out, const Tensor& y,
                   Tensor& x) {
  require_grad_size(grad_out, y.size(), "tanh_backward");
  if (!x.has_grad()) return;
  auto gx = x.grad();
  for (std::size_t i = 0; i < y.size(); ++i)
    gx[i] += grad_out[i] * (1.0 - y[i] * y[i]);
}

Tensor relu_act(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

void relu_backward(std::span<const double> grad_out, Tensor& x) {
  require_grad_size(grad_out, x.size(), "relu_backward");
  if (!x.has_grad()) return;
  auto gx = x.grad();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0) gx[i] += grad_out[i];
}

Tensor maxpool2(const Tensor& x) {
  require_rank(x, 3, "maxpool2");
  const std::size_t c = x.dim(0), oh = x.dim(1) / 2, ow = x.dim(2) / 2;
  if (oh == 0 || ow == 0) throw DimensionError("maxpool2: input smaller than 2x2");
  Tensor y({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double best = x.at(ch, 2 * oy, 2 * ox);
        best = std::max(best, x.at(ch, 2 * oy, 2 * ox + 1));
        best = std::max(best, x.at(ch, 2 * oy + 1, 2 * ox));
        best = std::max(best, x.at(ch, 2 * oy + 1, 2 * ox + 1));
        y.at(ch, oy, ox) = best;
      }
  return y;
}

void maxpool2_backward(std::span<const double> grad_out, Tensor& x) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = h / 2, ow = w / 2;
  require_grad_size(grad_out, c * oh * ow, "maxpool2_backward");
  if (!x.has_grad()) return;
  auto gx = x.grad();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        // First maximum in row-major window order receives the gradient.
        std::size_t best_y = 2 * oy, best_x = 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx)
            if (x.at(ch, 2 * oy + dy, 2 * ox + dx) > x.at(ch, best_y, best_x)) {
              best_y = 2 * oy + dy;
              best_x = 2 * ox + dx;
            }
        gx[(ch * h + best_y) * w + best_x] += grad_out[(ch * oh + oy) * ow + ox];
      }
}

Tensor bilinear_resize(const Tensor& a, std::size_t height, std::size_t width) {
  require_rank(a, 2, "bilinear_resize");
  const std::size_t sh = a.dim(0), sw = a.dim(1);
  if (sh == 0 || sw == 0) throw DimensionError("bilinear_resize: empty source");
  if (height == 0 || width == 0)
    throw DimensionError("bilinear_resize: target dimensions must be >= 1");

  auto source_coord = [](std::size_t out, std::size_t out_extent,
                         std::size_t in_extent) {
    if (out_extent == 1 || in_extent == 1) return 0.0;
    return static_cast<double>(out) * static_cast<double>(in_extent - 1) /
           static_cast<double>(out_extent - 1);
  };

  Tensor out({height, width});
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = source_coord(y, height, sh);
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), sh - 1);
    const std::size_t y1 = std::min(y0 + 1, sh - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = source_coord(x, width, sw);
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), sw - 1);
      const std::size_t x1 = std::min(x0 + 1, sw - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = a.at(y0, x0) * (1.0 - tx) + a.at(y0, x1) * tx;
      const double bottom = a.at(y1, x0) * (1.0 - tx) + a.at(y1, x1) * tx;
      out.at(y, x) = top * (1.0 - ty) + bottom * ty;
    }
  }
  return out;
}

}  // namespace erasehash::ops
