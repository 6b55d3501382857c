// Copyright (c) 2026 The compactnn Authors. All Rights Reserved.
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

#include "compactnn/tensor/transforms.h"

#include <algorithm>
#include <string>

#include "compactnn/common/error.h"

namespace compactnn {

Tensor PadToAlignment(const Tensor& t, std::int64_t unit, std::size_t axis) {
  if (unit < 1) throw ParameterError("alignment unit must be >= 1");
  if (axis >= t.rank())
    throw ShapeError("pad axis " + std::to_string(axis) + " out of range for " +
                     ShapeToString(t.dims()));
  const Shape& dims = t.dims();
  const std::int64_t extent = dims[axis];
  const std::int64_t padded = (extent + unit - 1) / unit * unit;
  if (padded == extent) return t;

  Shape new_dims = dims;
  new_dims[axis] = padded;
  // View the tensor as [outer, extent, inner] and copy each inner run.
  std::int64_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= dims[i];
  std::int64_t inner = 1;
  for (std::size_t i = axis + 1; i < dims.size(); ++i) inner *= dims[i];

  std::vector<float> data(static_cast<std::size_t>(NumElements(new_dims)), 0.0f);
  const auto src = t.data();
  for (std::int64_t o = 0; o < outer; ++o) {
    std::copy_n(src.begin() + o * extent * inner, extent * inner,
                data.begin() + o * padded * inner);
  }
  return Tensor(std::move(new_dims), t.logical_dims(), t.layout(),
                std::move(data));
}

Tensor TransformLayout(const Tensor& t, Layout target) {
  if (t.layout() == Layout::kRowMajor2D || target == Layout::kRowMajor2D)
    throw UnsupportedError(std::string("layout transform ") +
                           LayoutName(t.layout()) + " -> " + LayoutName(target) +
                           " is not supported");
  if (t.layout() == target) return t;

  const std::int64_t n = t.batch(), c = t.channels(), h = t.height(), w = t.width();
  auto permute = [](const Shape& s, Layout from) -> Shape {
    // s is in `from` order; return the other 4-D order.
    if (from == Layout::kNCHW) return {s[0], s[2], s[3], s[1]};
    return {s[0], s[3], s[1], s[2]};
  };
  Tensor out(permute(t.dims(), t.layout()), permute(t.logical_dims(), t.layout()),
             target, std::vector<float>(static_cast<std::size_t>(t.size())));
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t ic = 0; ic < c; ++ic)
      for (std::int64_t ih = 0; ih < h; ++ih)
        for (std::int64_t iw = 0; iw < w; ++iw)
          out.at4(in, ic, ih, iw) = t.at4(in, ic, ih, iw);
  return out;
}

std::int64_t ConvOutputExtent(std::int64_t in, std::int64_t kernel,
                              std::int64_t stride, std::int64_t padding) {
  if (stride < 1) throw ShapeError("stride must be >= 1");
  if (kernel < 1) throw ShapeError("kernel extent must be >= 1");
  if (padding < 0) throw ShapeError("padding must be >= 0");
  const std::int64_t span = in + 2 * padding;
  if (kernel > span)
    throw ShapeError("kernel " + std::to_string(kernel) +
                     " larger than padded input " + std::to_string(span));
  return (span - kernel) / stride + 1;
}

void Im2ColInto(const float* image, std::int64_t channels, std::int64_t height,
                std::int64_t width, std::int64_t kh, std::int64_t kw,
                std::int64_t stride, std::int64_t padding, float* out) {
  const std::int64_t ho = ConvOutputExtent(height, kh, stride, padding);
  const std::int64_t wo = ConvOutputExtent(width, kw, stride, padding);
  const std::int64_t cols = ho * wo;
  for (std::int64_t c = 0; c < channels; ++c) {
    const float* plane = image + c * height * width;
    for (std::int64_t i = 0; i < kh; ++i) {
      for (std::int64_t j = 0; j < kw; ++j) {
        float* row = out + ((c * kh + i) * kw + j) * cols;
        for (std::int64_t oh = 0; oh < ho; ++oh) {
          const std::int64_t y = oh * stride - padding + i;
          float* dst = row + oh * wo;
          if (y < 0 || y >= height) {
            std::fill_n(dst, wo, 0.0f);
            continue;
          }
          const float* src = plane + y * width;
          for (std::int64_t ow = 0; ow < wo; ++ow) {
            const std::int64_t x = ow * stride - padding + j;
            dst[ow] = (x >= 0 && x < width) ? src[x] : 0.0f;
          }
        }
      }
    }
  }
}

Tensor Im2Col(const Tensor& input, std::int64_t kh, std::int64_t kw,
              std::int64_t stride, std::int64_t padding, std::int64_t n) {
  if (input.rank() != 4 || input.layout() != Layout::kNCHW)
    throw ShapeError("im2col expects an NCHW tensor, got " +
                     ShapeToString(input.dims()));
  if (n < 0 || n >= input.batch()) throw ShapeError("im2col batch index out of range");
  const std::int64_t c = input.channels(), h = input.height(), w = input.width();
  const std::int64_t ho = ConvOutputExtent(h, kh, stride, padding);
  const std::int64_t wo = ConvOutputExtent(w, kw, stride, padding);
  Tensor out({c * kh * kw, ho * wo}, Layout::kRowMajor2D);
  Im2ColInto(input.data().data() + n * c * h * w, c, h, w, kh, kw, stride,
             padding, out.data().data());
  return out;
}

}  // namespace compactnn
