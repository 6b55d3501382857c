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

#include "compactnn/graph/layer.h"

#include <cstring>

#include "compactnn/common/error.h"

namespace compactnn {

const char* LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput: return "Input";
    case LayerKind::kConv2D: return "Conv2D";
    case LayerKind::kDepthwiseConv2D: return "DepthwiseConv2D";
    case LayerKind::kBatchNorm: return "BatchNorm";
    case LayerKind::kActivation: return "Activation";
    case LayerKind::kPool: return "Pool";
    case LayerKind::kFullyConnected: return "FullyConnected";
    case LayerKind::kAdd: return "Add";
    case LayerKind::kGemm: return "Gemm";
    case LayerKind::kFusedConvBnAct: return "FusedConvBnAct";
    case LayerKind::kSoftmax: return "Softmax";
  }
  return "?";
}

const char* ActivationName(Activation act) {
  switch (act) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kRelu6: return "relu6";
  }
  return "?";
}

bool IsValidLayerKind(std::uint16_t code) {
  return code <= static_cast<std::uint16_t>(LayerKind::kSoftmax);
}

std::int64_t LayerSpec::WeightRows() const {
  switch (compute_kind()) {
    case LayerKind::kConv2D:
    case LayerKind::kGemm:
    case LayerKind::kFullyConnected:
      return conv.out_channels;
    case LayerKind::kDepthwiseConv2D:
      return conv.in_channels;
    default:
      return 0;
  }
}

std::int64_t LayerSpec::WeightCols() const {
  switch (compute_kind()) {
    case LayerKind::kConv2D:
      return conv.in_channels * conv.kernel_h * conv.kernel_w;
    case LayerKind::kDepthwiseConv2D:
      return conv.kernel_h * conv.kernel_w;
    case LayerKind::kGemm:
    case LayerKind::kFullyConnected:
      return conv.in_channels;
    default:
      return 0;
  }
}

Shape LayerSpec::ExpectedDenseWeightDims() const {
  switch (compute_kind()) {
    case LayerKind::kConv2D:
      return {conv.out_channels, conv.in_channels, conv.kernel_h, conv.kernel_w};
    case LayerKind::kDepthwiseConv2D:
      return {conv.in_channels, 1, conv.kernel_h, conv.kernel_w};
    case LayerKind::kGemm:
    case LayerKind::kFullyConnected:
      return {conv.out_channels, conv.in_channels};
    default:
      return {};
  }
}

Tensor LayerSpec::WeightMatrix() const {
  if (has_sparse_weights()) return CsrToDense(sparse_weights());
  if (!has_dense_weights()) throw ShapeError("layer " + std::to_string(id) + " has no weights");
  return dense_weights().Reshaped({WeightRows(), WeightCols()}, Layout::kRowMajor2D);
}

namespace {

bool FloatsBitEqual(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

bool WeightsBitEqual(const Weights& a, const Weights& b) {
  if (a.index() != b.index()) return false;
  if (const auto* t = std::get_if<Tensor>(&a)) return t->BitEquals(std::get<Tensor>(b));
  if (const auto* s = std::get_if<SparseMatrixCSR>(&a))
    return s->BitEquals(std::get<SparseMatrixCSR>(b));
  return true;
}

}  // namespace

bool LayerSpec::BitEquals(const LayerSpec& o) const {
  if (id != o.id || kind != o.kind || input_dims != o.input_dims || conv != o.conv ||
      core != o.core || activation != o.activation || !(pool == o.pool))
    return false;
  if (!WeightsBitEqual(weights, o.weights)) return false;
  if (bias.has_value() != o.bias.has_value()) return false;
  if (bias && !FloatsBitEqual(*bias, *o.bias)) return false;
  if (bn.has_value() != o.bn.has_value()) return false;
  if (bn) {
    if (std::memcmp(&bn->eps, &o.bn->eps, sizeof(float)) != 0) return false;
    if (!FloatsBitEqual(bn->gamma, o.bn->gamma) || !FloatsBitEqual(bn->beta, o.bn->beta) ||
        !FloatsBitEqual(bn->mean, o.bn->mean) || !FloatsBitEqual(bn->var, o.bn->var))
      return false;
  }
  return true;
}

LayerSpec MakeInput(std::uint32_t id, Shape dims) {
  LayerSpec l;
  l.id = id;
  l.kind = LayerKind::kInput;
  l.input_dims = std::move(dims);
  return l;
}

LayerSpec MakeConv(std::uint32_t id, const ConvAttrs& attrs, Tensor weights,
                   std::optional<std::vector<float>> bias) {
  LayerSpec l;
  l.id = id;
  l.kind = LayerKind::kConv2D;
  l.conv = attrs;
  l.weights = std::move(weights);
  l.bias = std::move(bias);
  return l;
}

LayerSpec MakeDepthwise(std::uint32_t id, const ConvAttrs& attrs, Tensor weights,
                        std::optional<std::vector<float>> bias) {
  LayerSpec l = MakeConv(id, attrs, std::move(weights), std::move(bias));
  l.kind = LayerKind::kDepthwiseConv2D;
  return l;
}

LayerSpec MakeBatchNorm(std::uint32_t id, BatchNormParams params) {
  LayerSpec l;
  l.id = id;
  l.kind = LayerKind::kBatchNorm;
  l.bn = std::move(params);
  return l;
}

LayerSpec MakeActivation(std::uint32_t id, Activation act) {
  LayerSpec l;
  l.id = id;
  l.kind = LayerKind::kActivation;
  l.activation = act;
  return l;
}

LayerSpec MakePool(std::uint32_t id, const PoolAttrs& attrs) {
  LayerSpec l;
  l.id = id;
  l.kind = LayerKind::kPool;
  l.pool = attrs;
  return l;
}

LayerSpec MakeFullyConnected(std::uint32_t id, std::int64_t in, std::int64_t out,
                             Weights weights, std::optional<std::vector<float>> bias) {
  LayerSpec l;
  l.id = id;
  l.kind = LayerKind::kFullyConnected;
  l.conv.in_channels = in;
  l.conv.out_channels = out;
  l.weights = std::move(weights);
  l.bias = std::move(bias);
  return l;
}

LayerSpec MakeAdd(std::uint32_t id) {
  LayerSpec l;
  l.id = id;
  l.kind = LayerKind::kAdd;
  return l;
}

LayerSpec MakeSoftmax(std::uint32_t id) {
  LayerSpec l;
  l.id = id;
  l.kind = LayerKind::kSoftmax;
  return l;
}

}  // namespace compactnn
