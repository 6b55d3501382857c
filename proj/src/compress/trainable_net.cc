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

#include "compactnn/compress/trainable_net.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "compactnn/common/error.h"
#include "compactnn/compress/dataset.h"
#include "compactnn/engine/kernels.h"
#include "compactnn/tensor/transforms.h"

namespace compactnn {

Dataset Dataset::Slice(std::int64_t begin, std::int64_t count) const {
  Dataset out;
  out.sample_shape = sample_shape;
  begin = std::clamp<std::int64_t>(begin, 0, size());
  count = std::clamp<std::int64_t>(count, 0, size() - begin);
  const std::int64_t s = sample_size();
  out.images.assign(images.begin() + begin * s, images.begin() + (begin + count) * s);
  out.labels.assign(labels.begin() + begin, labels.begin() + begin + count);
  return out;
}

namespace {

// C (m x n) = A (m x k) * B (k x n). Float goes through the tiled kernel;
// double (used for gradient checking) through a plain loop with the same
// ascending-k accumulation.
void MatMul(const float* a, const float* b, float* c, std::int64_t m, std::int64_t n,
            std::int64_t k) {
  GemmTiled(std::span<const float>(a, static_cast<std::size_t>(m * k)),
            std::span<const float>(b, static_cast<std::size_t>(k * n)),
            std::span<float>(c, static_cast<std::size_t>(m * n)), m, n, k,
            DefaultKernelConfig());
}

void MatMul(const double* a, const double* b, double* c, std::int64_t m, std::int64_t n,
            std::int64_t k) {
  std::fill(c, c + m * n, 0.0);
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      for (std::int64_t j = 0; j < n; ++j) c[i * n + j] += av * b[p * n + j];
    }
}

template <typename T>
void Transpose(const T* src, T* dst, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

template <typename T>
void Im2Col(const T* image, const BasicTrainLayer<T>& l, T* out) {
  if constexpr (std::is_same_v<T, float>) {
    Im2ColInto(image, l.conv.in_channels, l.in_h, l.in_w, l.conv.kernel_h, l.conv.kernel_w,
               l.conv.stride, l.conv.padding, out);
  } else {
    const std::int64_t kh = l.conv.kernel_h, kw = l.conv.kernel_w;
    const std::int64_t plane = l.out_h * l.out_w;
    for (std::int64_t c = 0; c < l.conv.in_channels; ++c)
      for (std::int64_t i = 0; i < kh; ++i)
        for (std::int64_t j = 0; j < kw; ++j) {
          T* row = out + ((c * kh + i) * kw + j) * plane;
          for (std::int64_t oh = 0; oh < l.out_h; ++oh)
            for (std::int64_t ow = 0; ow < l.out_w; ++ow) {
              const std::int64_t y = oh * l.conv.stride - l.conv.padding + i;
              const std::int64_t x = ow * l.conv.stride - l.conv.padding + j;
              row[oh * l.out_w + ow] = (y >= 0 && y < l.in_h && x >= 0 && x < l.in_w)
                                           ? image[(c * l.in_h + y) * l.in_w + x]
                                           : T(0);
            }
        }
  }
}

// Adjoint of Im2Col: scatters columns back onto the image, accumulating.
template <typename T>
void Col2ImAdd(const T* cols, const BasicTrainLayer<T>& l, T* image) {
  const std::int64_t kh = l.conv.kernel_h, kw = l.conv.kernel_w;
  const std::int64_t plane = l.out_h * l.out_w;
  for (std::int64_t c = 0; c < l.conv.in_channels; ++c)
    for (std::int64_t i = 0; i < kh; ++i)
      for (std::int64_t j = 0; j < kw; ++j) {
        const T* row = cols + ((c * kh + i) * kw + j) * plane;
        for (std::int64_t oh = 0; oh < l.out_h; ++oh) {
          const std::int64_t y = oh * l.conv.stride - l.conv.padding + i;
          if (y < 0 || y >= l.in_h) continue;
          for (std::int64_t ow = 0; ow < l.out_w; ++ow) {
            const std::int64_t x = ow * l.conv.stride - l.conv.padding + j;
            if (x < 0 || x >= l.in_w) continue;
            image[(c * l.in_h + y) * l.in_w + x] += row[oh * l.out_w + ow];
          }
        }
      }
}

template <typename T>
void LayerForward(const BasicTrainLayer<T>& l, const T* x, T* y, std::int64_t batch) {
  switch (l.kind) {
    case TrainLayerKind::kRelu:
      for (std::int64_t i = 0; i < batch * l.in_size; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
      return;
    case TrainLayerKind::kFullyConnected: {
      const std::int64_t in = l.in_size, out = l.out_size;
      std::vector<T> xt(static_cast<std::size_t>(in * batch));
      std::vector<T> yt(static_cast<std::size_t>(out * batch));
      Transpose(x, xt.data(), batch, in);
      MatMul(l.weight.data(), xt.data(), yt.data(), out, batch, in);
      Transpose(yt.data(), y, out, batch);
      for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t o = 0; o < out; ++o) y[b * out + o] += l.bias[o];
      return;
    }
    case TrainLayerKind::kConv2D: {
      const std::int64_t plane = l.out_h * l.out_w;
      const std::int64_t reduce = l.weight_cols();
      std::vector<T> cols(static_cast<std::size_t>(reduce * plane));
      for (std::int64_t b = 0; b < batch; ++b) {
        Im2Col(x + b * l.in_size, l, cols.data());
        T* yb = y + b * l.out_size;
        MatMul(l.weight.data(), cols.data(), yb, l.conv.out_channels, plane, reduce);
        for (std::int64_t k = 0; k < l.conv.out_channels; ++k)
          for (std::int64_t p = 0; p < plane; ++p) yb[k * plane + p] += l.bias[k];
      }
      return;
    }
  }
}

// Given dL/dy, fills the layer's gradients and (when dx is non-null) dL/dx.
template <typename T>
void LayerBackward(BasicTrainLayer<T>& l, const T* x, const T* y, const T* dy, T* dx,
                   std::int64_t batch) {
  switch (l.kind) {
    case TrainLayerKind::kRelu:
      if (dx)
        for (std::int64_t i = 0; i < batch * l.in_size; ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
      return;
    case TrainLayerKind::kFullyConnected: {
      const std::int64_t in = l.in_size, out = l.out_size;
      std::vector<T> dyt(static_cast<std::size_t>(out * batch));
      Transpose(dy, dyt.data(), batch, out);
      MatMul(dyt.data(), x, l.grad_weight.data(), out, in, batch);
      for (std::int64_t o = 0; o < out; ++o) {
        T s = 0;
        for (std::int64_t b = 0; b < batch; ++b) s += dyt[o * batch + b];
        l.grad_bias[o] = s;
      }
      if (dx) MatMul(dy, l.weight.data(), dx, batch, in, out);
      return;
    }
    case TrainLayerKind::kConv2D: {
      const std::int64_t k_out = l.conv.out_channels;
      const std::int64_t plane = l.out_h * l.out_w;
      const std::int64_t reduce = l.weight_cols();
      std::vector<T> cols(static_cast<std::size_t>(reduce * plane));
      std::vector<T> cols_t(cols.size());
      std::vector<T> dw(l.weight.size());
      std::vector<T> wt(l.weight.size());
      std::vector<T> dcols(cols.size());
      Transpose(l.weight.data(), wt.data(), k_out, reduce);
      std::fill(l.grad_weight.begin(), l.grad_weight.end(), T(0));
      std::fill(l.grad_bias.begin(), l.grad_bias.end(), T(0));
      if (dx) std::fill(dx, dx + batch * l.in_size, T(0));
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* dyb = dy + b * l.out_size;
        Im2Col(x + b * l.in_size, l, cols.data());
        Transpose(cols.data(), cols_t.data(), reduce, plane);
        MatMul(dyb, cols_t.data(), dw.data(), k_out, reduce, plane);
        for (std::size_t i = 0; i < dw.size(); ++i) l.grad_weight[i] += dw[i];
        for (std::int64_t k = 0; k < k_out; ++k) {
          T s = 0;
          for (std::int64_t p = 0; p < plane; ++p) s += dyb[k * plane + p];
          l.grad_bias[k] += s;
        }
        if (dx) {
          MatMul(wt.data(), dyb, dcols.data(), reduce, plane, k_out);
          Col2ImAdd(dcols.data(), l, dx + b * l.in_size);
        }
      }
      return;
    }
  }
}

}  // namespace

template <typename T>
BasicTrainableNet<T>::BasicTrainableNet(Shape input_shape) : input_shape_(std::move(input_shape)) {
  if (input_shape_.empty() || NumElements(input_shape_) < 1)
    throw ShapeError("trainable net needs a non-empty input shape");
}

template <typename T>
std::int64_t BasicTrainableNet<T>::num_classes() const {
  return layers_.empty() ? input_size() : layers_.back().out_size;
}

template <typename T>
std::vector<std::size_t> BasicTrainableNet<T>::param_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].has_params()) out.push_back(i);
  return out;
}

template <typename T>
void BasicTrainableNet<T>::AddFullyConnected(std::int64_t out_features) {
  if (out_features < 1) throw ShapeError("fully connected layer needs positive width");
  Layer l;
  l.kind = TrainLayerKind::kFullyConnected;
  l.in_size = num_classes();
  l.out_size = out_features;
  l.conv.in_channels = l.in_size;
  l.conv.out_channels = out_features;
  l.weight.assign(static_cast<std::size_t>(l.in_size * out_features), T(0));
  l.bias.assign(static_cast<std::size_t>(out_features), T(0));
  l.grad_weight.assign(l.weight.size(), T(0));
  l.grad_bias.assign(l.bias.size(), T(0));
  layers_.push_back(std::move(l));
}

template <typename T>
void BasicTrainableNet<T>::AddConv2D(std::int64_t out_channels, std::int64_t kernel,
                                     std::int64_t stride, std::int64_t padding) {
  // Spatial geometry of the current output: the input, or the last conv.
  std::int64_t c = 0, h = 0, w = 0;
  const Layer* last_spatial = nullptr;
  for (const auto& l : layers_) {
    if (l.kind == TrainLayerKind::kFullyConnected)
      throw UnsupportedError("convolution after a fully connected layer");
    if (l.kind == TrainLayerKind::kConv2D) last_spatial = &l;
  }
  if (last_spatial) {
    c = last_spatial->conv.out_channels;
    h = last_spatial->out_h;
    w = last_spatial->out_w;
  } else {
    if (input_shape_.size() != 3) throw ShapeError("convolution needs a (C,H,W) input");
    c = input_shape_[0];
    h = input_shape_[1];
    w = input_shape_[2];
  }
  Layer l;
  l.kind = TrainLayerKind::kConv2D;
  l.conv = ConvAttrs{c, out_channels, kernel, kernel, stride, padding};
  l.in_h = h;
  l.in_w = w;
  l.out_h = ConvOutputExtent(h, kernel, stride, padding);
  l.out_w = ConvOutputExtent(w, kernel, stride, padding);
  l.in_size = c * h * w;
  l.out_size = out_channels * l.out_h * l.out_w;
  l.weight.assign(static_cast<std::size_t>(out_channels * c * kernel * kernel), T(0));
  l.bias.assign(static_cast<std::size_t>(out_channels), T(0));
  l.grad_weight.assign(l.weight.size(), T(0));
  l.grad_bias.assign(l.bias.size(), T(0));
  layers_.push_back(std::move(l));
}

template <typename T>
void BasicTrainableNet<T>::AddRelu() {
  Layer l;
  l.kind = TrainLayerKind::kRelu;
  l.in_size = l.out_size = num_classes();
  layers_.push_back(std::move(l));
}

template <typename T>
void BasicTrainableNet<T>::InitializeHe(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : layers_) {
    if (!l.has_params()) continue;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(l.weight_cols())));
    for (auto& v : l.weight) v = static_cast<T>(dist(rng));
    std::fill(l.bias.begin(), l.bias.end(), T(0));
  }
}

template <typename T>
std::vector<T> BasicTrainableNet<T>::Forward(const T* x, std::int64_t batch) const {
  std::vector<T> cur(x, x + batch * input_size()), next;
  for (const auto& l : layers_) {
    next.assign(static_cast<std::size_t>(batch * l.out_size), T(0));
    LayerForward(l, cur.data(), next.data(), batch);
    cur.swap(next);
  }
  return cur;
}

template <typename T>
double BasicTrainableNet<T>::ForwardBackward(const T* x, std::span<const std::int32_t> labels,
                                             std::int64_t batch) {
  if (batch < 1) throw ShapeError("empty batch");
  if (static_cast<std::int64_t>(labels.size()) < batch)
    throw ShapeError("batch of " + std::to_string(batch) + " samples has " +
                     std::to_string(labels.size()) + " labels");
  const std::int64_t classes = num_classes();
  for (std::int64_t b = 0; b < batch; ++b)
    if (labels[b] < 0 || labels[b] >= classes)
      throw ParameterError("label " + std::to_string(labels[b]) + " outside [0, " +
                           std::to_string(classes) + ")");

  // acts[i] is the input of layer i; acts.back() the logits.
  std::vector<std::vector<T>> acts(layers_.size() + 1);
  acts[0].assign(x, x + batch * input_size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    acts[i + 1].assign(static_cast<std::size_t>(batch * layers_[i].out_size), T(0));
    LayerForward(layers_[i], acts[i].data(), acts[i + 1].data(), batch);
  }

  const std::vector<T>& logits = acts.back();
  std::vector<T> grad(logits.size());
  double loss = 0.0;
  for (std::int64_t b = 0; b < batch; ++b) {
    const T* z = logits.data() + b * classes;
    double mx = static_cast<double>(z[0]);
    for (std::int64_t j = 1; j < classes; ++j) mx = std::max(mx, static_cast<double>(z[j]));
    double sum = 0.0;
    for (std::int64_t j = 0; j < classes; ++j) sum += std::exp(static_cast<double>(z[j]) - mx);
    const double lse = mx + std::log(sum);
    loss += lse - static_cast<double>(z[labels[b]]);
    for (std::int64_t j = 0; j < classes; ++j) {
      const double p = std::exp(static_cast<double>(z[j]) - lse);
      grad[b * classes + j] =
          static_cast<T>((p - (j == labels[b] ? 1.0 : 0.0)) / static_cast<double>(batch));
    }
  }

  std::vector<T> dx;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const bool need_dx = i > 0;
    if (need_dx) dx.assign(static_cast<std::size_t>(batch * layers_[i].in_size), T(0));
    LayerBackward(layers_[i], acts[i].data(), acts[i + 1].data(), grad.data(),
                  need_dx ? dx.data() : nullptr, batch);
    if (need_dx) grad.swap(dx);
  }
  return loss / static_cast<double>(batch);
}

template <typename T>
bool BasicTrainableNet<T>::BitEquals(const BasicTrainableNet& other) const {
  if (input_shape_ != other.input_shape_ || layers_.size() != other.layers_.size()) return false;
  auto same = [](const std::vector<T>& a, const std::vector<T>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
  };
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto &a = layers_[i], &b = other.layers_[i];
    if (a.kind != b.kind || a.conv != b.conv || a.in_size != b.in_size ||
        a.out_size != b.out_size || !same(a.weight, b.weight) || !same(a.bias, b.bias))
      return false;
  }
  return true;
}

template class BasicTrainableNet<float>;
template class BasicTrainableNet<double>;

TrainableNet MakeLeNet300100(std::uint64_t seed) {
  TrainableNet net({1, 28, 28});
  net.AddFullyConnected(300);
  net.AddRelu();
  net.AddFullyConnected(100);
  net.AddRelu();
  net.AddFullyConnected(10);
  net.InitializeHe(seed);
  return net;
}

}  // namespace compactnn
