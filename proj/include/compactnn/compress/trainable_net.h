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

#ifndef COMPACTNN_COMPRESS_TRAINABLE_NET_H_
#define COMPACTNN_COMPRESS_TRAINABLE_NET_H_

#include <cstdint>
#include <span>
#include <vector>

#include "compactnn/graph/layer.h"
#include "compactnn/tensor/tensor.h"

namespace compactnn {

enum class TrainLayerKind : std::uint8_t { kFullyConnected, kConv2D, kRelu };

template <typename T>
struct BasicTrainLayer {
  TrainLayerKind kind = TrainLayerKind::kRelu;
  // Per-sample input and output element counts.
  std::int64_t in_size = 0;
  std::int64_t out_size = 0;
  // Conv2D geometry; FullyConnected uses in/out channels only.
  ConvAttrs conv;
  std::int64_t in_h = 0, in_w = 0, out_h = 0, out_w = 0;

  // Weights are (out x in) for FullyConnected and (K x C*kh*kw) for
  // Conv2D, row-major, matching the graph's dense weight layout.
  std::vector<T> weight;
  std::vector<T> bias;
  std::vector<T> grad_weight;
  std::vector<T> grad_bias;

  bool has_params() const { return kind != TrainLayerKind::kRelu; }
  std::int64_t weight_rows() const { return conv.out_channels; }
  std::int64_t weight_cols() const {
    return kind == TrainLayerKind::kConv2D
               ? conv.in_channels * conv.kernel_h * conv.kernel_w
               : conv.in_channels;
  }
};

// Feed-forward classifier ending in a softmax cross-entropy head. Samples
// are stored back to back in NCHW order; the logits are (batch x classes).
template <typename T>
class BasicTrainableNet {
 public:
  using Layer = BasicTrainLayer<T>;

  BasicTrainableNet() = default;
  // `input_shape` excludes the batch: {features} or {C, H, W}.
  explicit BasicTrainableNet(Shape input_shape);

  void AddFullyConnected(std::int64_t out_features);
  void AddConv2D(std::int64_t out_channels, std::int64_t kernel, std::int64_t stride,
                 std::int64_t padding);
  void AddRelu();

  // He-normal weights, zero biases.
  void InitializeHe(std::uint64_t seed);

  const Shape& input_shape() const { return input_shape_; }
  std::int64_t input_size() const { return NumElements(input_shape_); }
  std::int64_t num_classes() const;
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  // Indices of the layers that carry weights, in order.
  std::vector<std::size_t> param_layers() const;

  std::vector<T> Forward(const T* x, std::int64_t batch) const;
  // Mean cross-entropy over the batch. Overwrites every gradient buffer
  // with the analytic gradient of that mean.
  double ForwardBackward(const T* x, std::span<const std::int32_t> labels, std::int64_t batch);

  // Same network with every parameter converted to U.
  template <typename U>
  BasicTrainableNet<U> Cast() const;

  bool BitEquals(const BasicTrainableNet& other) const;

 private:
  template <typename U>
  friend class BasicTrainableNet;

  Shape input_shape_;
  std::vector<Layer> layers_;
};

using TrainLayer = BasicTrainLayer<float>;
using TrainableNet = BasicTrainableNet<float>;

// Input (784) -> FC 300 -> ReLU -> FC 100 -> ReLU -> FC 10, He-initialized.
TrainableNet MakeLeNet300100(std::uint64_t seed);

template <typename T>
template <typename U>
BasicTrainableNet<U> BasicTrainableNet<T>::Cast() const {
  BasicTrainableNet<U> out(input_shape_);
  for (const auto& l : layers_) {
    BasicTrainLayer<U> c;
    c.kind = l.kind;
    c.in_size = l.in_size;
    c.out_size = l.out_size;
    c.conv = l.conv;
    c.in_h = l.in_h;
    c.in_w = l.in_w;
    c.out_h = l.out_h;
    c.out_w = l.out_w;
    c.weight.assign(l.weight.begin(), l.weight.end());
    c.bias.assign(l.bias.begin(), l.bias.end());
    c.grad_weight.assign(l.grad_weight.size(), U(0));
    c.grad_bias.assign(l.grad_bias.size(), U(0));
    out.layers_.push_back(std::move(c));
  }
  return out;
}

}  // namespace compactnn

#endif  // COMPACTNN_COMPRESS_TRAINABLE_NET_H_
