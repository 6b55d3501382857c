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

#include <algorithm>
#include <limits>
#include <string>

#include "compactnn/common/error.h"
#include "compactnn/engine/kernels.h"
#include "compactnn/tensor/transforms.h"

namespace compactnn {

namespace {

void RequireNchw(const Tensor& x, const char* what) {
  if (x.rank() != 4 || x.layout() != Layout::kNCHW)
    throw ShapeError(std::string(what) + " expects an NCHW input, got " +
                     ShapeToString(x.dims()));
}

void CheckBias(const std::optional<std::vector<float>>& bias, std::int64_t channels) {
  if (bias && static_cast<std::int64_t>(bias->size()) != channels)
    throw ShapeError("bias length " + std::to_string(bias->size()) + " != " +
                     std::to_string(channels) + " output channels");
}

}  // namespace

Tensor Conv2dDirect(const Tensor& x, const Tensor& w,
                    const std::optional<std::vector<float>>& bias, std::int64_t stride,
                    std::int64_t padding) {
  RequireNchw(x, "conv2d");
  if (w.rank() != 4) throw ShapeError("conv2d weights must be 4-D (K,C,kh,kw)");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::int64_t k = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != c)
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(c) +
                     ", weights expect " + std::to_string(w.dim(1)));
  CheckBias(bias, k);
  const std::int64_t ho = ConvOutputExtent(h, kh, stride, padding);
  const std::int64_t wo = ConvOutputExtent(wd, kw, stride, padding);
  Tensor out({n, k, ho, wo}, Layout::kNCHW);
  const auto xs = x.data();
  const auto ws = w.data();
  auto os = out.data();
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t oc = 0; oc < k; ++oc)
      for (std::int64_t oh = 0; oh < ho; ++oh)
        for (std::int64_t ow = 0; ow < wo; ++ow) {
          float acc = 0.0f;
          for (std::int64_t ic = 0; ic < c; ++ic)
            for (std::int64_t i = 0; i < kh; ++i) {
              const std::int64_t y = oh * stride - padding + i;
              if (y < 0 || y >= h) continue;
              for (std::int64_t j = 0; j < kw; ++j) {
                const std::int64_t xx = ow * stride - padding + j;
                if (xx < 0 || xx >= wd) continue;
                acc += xs[((in * c + ic) * h + y) * wd + xx] *
                       ws[((oc * c + ic) * kh + i) * kw + j];
              }
            }
          if (bias) acc += (*bias)[static_cast<std::size_t>(oc)];
          os[((in * k + oc) * ho + oh) * wo + ow] = acc;
        }
  return out;
}

Tensor DepthwiseConv2d(const Tensor& x, const Tensor& w,
                       const std::optional<std::vector<float>>& bias, std::int64_t stride,
                       std::int64_t padding, LoadCounter* counter) {
  RequireNchw(x, "depthwise conv");
  if (w.rank() != 4 || w.dim(1) != 1) throw ShapeError("depthwise weights must be (C,1,kh,kw)");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  if (w.dim(0) != c)
    throw ShapeError("depthwise channel mismatch: input has " + std::to_string(c) +
                     ", weights have " + std::to_string(w.dim(0)));
  CheckBias(bias, c);
  const std::int64_t kh = w.dim(2), kw = w.dim(3);
  const std::int64_t ho = ConvOutputExtent(h, kh, stride, padding);
  const std::int64_t wo = ConvOutputExtent(wd, kw, stride, padding);
  Tensor out({n, c, ho, wo}, Layout::kNCHW);
  const auto xs = x.data();
  const auto ws = w.data();
  auto os = out.data();
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const float* plane = xs.data() + (in * c + ch) * h * wd;
      float* oplane = os.data() + (in * c + ch) * ho * wo;
      // Taps are applied one at a time over the whole output plane; each
      // tap weight is loaded once per plane.
      for (std::int64_t i = 0; i < kh; ++i)
        for (std::int64_t j = 0; j < kw; ++j) {
          const float wv = ws[(ch * kh + i) * kw + j];
          // Output columns whose input column is in range.
          const std::int64_t ow_lo =
              std::max<std::int64_t>(0, (padding - j + stride - 1) / stride);
          const std::int64_t ow_hi =
              std::min<std::int64_t>(wo, (wd - 1 + padding - j) / stride + 1);
          for (std::int64_t oh = 0; oh < ho; ++oh) {
            const std::int64_t y = oh * stride - padding + i;
            if (y < 0 || y >= h) continue;
            const float* src = plane + y * wd - padding + j;
            float* dst = oplane + oh * wo;
            if (stride == 1) {
              for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow) dst[ow] += wv * src[ow];
            } else {
              for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow) dst[ow] += wv * src[ow * stride];
            }
          }
        }
      if (bias) {
        const float b = (*bias)[static_cast<std::size_t>(ch)];
        for (std::int64_t p = 0; p < ho * wo; ++p) oplane[p] += b;
      }
    }
  if (counter) {
    counter->weight_loads += static_cast<std::uint64_t>(n * c * kh * kw);
    counter->activation_loads += static_cast<std::uint64_t>(n * c * kh * kw * ho * wo);
  }
  return out;
}

Tensor Pool2d(const Tensor& x, PoolKind kind, std::int64_t window, std::int64_t stride) {
  RequireNchw(x, "pool");
  if (window < 1 || stride < 1) throw ShapeError("pool window and stride must be positive");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (window > h || window > w)
    throw ShapeError("pool window " + std::to_string(window) + " exceeds input " +
                     ShapeToString(x.dims()));
  const std::int64_t ho = ConvOutputExtent(h, window, stride, 0);
  const std::int64_t wo = ConvOutputExtent(w, window, stride, 0);
  Tensor out({n, c, ho, wo}, Layout::kNCHW);
  const auto xs = x.data();
  auto os = out.data();
  const float inv = 1.0f / static_cast<float>(window * window);
  for (std::int64_t p = 0; p < n * c; ++p) {
    const float* plane = xs.data() + p * h * w;
    for (std::int64_t oh = 0; oh < ho; ++oh)
      for (std::int64_t ow = 0; ow < wo; ++ow) {
        float acc = kind == PoolKind::kMax ? -std::numeric_limits<float>::infinity() : 0.0f;
        for (std::int64_t i = 0; i < window; ++i)
          for (std::int64_t j = 0; j < window; ++j) {
            const float v = plane[(oh * stride + i) * w + ow * stride + j];
            acc = kind == PoolKind::kMax ? std::max(acc, v) : acc + v;
          }
        os[(p * ho + oh) * wo + ow] = kind == PoolKind::kMax ? acc : acc * inv;
      }
  }
  return out;
}

Tensor GlobalPool(const Tensor& x, PoolKind kind) {
  RequireNchw(x, "global pool");
  const std::int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (hw == 0) throw ShapeError("global pool over an empty plane");
  Tensor out({n, c, 1, 1}, Layout::kNCHW);
  const auto xs = x.data();
  for (std::int64_t p = 0; p < n * c; ++p) {
    const float* plane = xs.data() + p * hw;
    float acc = kind == PoolKind::kMax ? -std::numeric_limits<float>::infinity() : 0.0f;
    for (std::int64_t i = 0; i < hw; ++i)
      acc = kind == PoolKind::kMax ? std::max(acc, plane[i]) : acc + plane[i];
    out[p] = kind == PoolKind::kMax ? acc : acc / static_cast<float>(hw);
  }
  return out;
}

}  // namespace compactnn
