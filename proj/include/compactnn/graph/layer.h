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

#ifndef COMPACTNN_GRAPH_LAYER_H_
#define COMPACTNN_GRAPH_LAYER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "compactnn/tensor/sparse_matrix.h"
#include "compactnn/tensor/tensor.h"

namespace compactnn {

// Numeric values are the CADM kind codes.
enum class LayerKind : std::uint16_t {
  kInput = 0,
  kConv2D = 1,
  kDepthwiseConv2D = 2,
  kBatchNorm = 3,
  kActivation = 4,
  kPool = 5,
  kFullyConnected = 6,
  kAdd = 7,
  kGemm = 8,
  kFusedConvBnAct = 9,
  kSoftmax = 10,
};

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1, kRelu6 = 2 };
enum class PoolKind : std::uint8_t { kMax = 0, kAvg = 1 };

const char* LayerKindName(LayerKind kind);
const char* ActivationName(Activation act);
bool IsValidLayerKind(std::uint16_t code);

// Channel and window attributes shared by the conv family, Gemm and
// FullyConnected (which uses only in/out channels).
struct ConvAttrs {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  bool operator==(const ConvAttrs&) const = default;
};

struct PoolAttrs {
  PoolKind kind = PoolKind::kMax;
  std::int64_t window = 2;
  std::int64_t stride = 2;
  // Global pooling reduces each channel plane to 1x1; window is ignored.
  bool global = false;
  bool operator==(const PoolAttrs&) const = default;
};

inline constexpr float kDefaultBatchNormEps = 1e-5f;

struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> mean;
  std::vector<float> var;
  float eps = kDefaultBatchNormEps;
  std::int64_t channels() const { return static_cast<std::int64_t>(gamma.size()); }
};

// Dense weights are a Tensor:
//   Conv2D / fused conv core   (K, C, kh, kw)
//   DepthwiseConv2D / dw core  (C, 1, kh, kw)
//   FullyConnected             (out, in)
//   Gemm                       (K, C)
// Sparse weights are a CSR matrix with the same leading extent as rows and
// the remaining extents flattened into columns.
using Weights = std::variant<std::monostate, Tensor, SparseMatrixCSR>;

struct LayerSpec {
  std::uint32_t id = 0;
  LayerKind kind = LayerKind::kInput;

  Shape input_dims;        // kInput
  ConvAttrs conv;          // conv family, Gemm, FullyConnected
  LayerKind core = LayerKind::kConv2D;  // kFusedConvBnAct
  Activation activation = Activation::kIdentity;  // kActivation, fused, Gemm
  PoolAttrs pool;          // kPool

  Weights weights;
  std::optional<std::vector<float>> bias;
  std::optional<BatchNormParams> bn;

  bool has_dense_weights() const { return std::holds_alternative<Tensor>(weights); }
  bool has_sparse_weights() const {
    return std::holds_alternative<SparseMatrixCSR>(weights);
  }
  bool has_weights() const { return !std::holds_alternative<std::monostate>(weights); }
  const Tensor& dense_weights() const { return std::get<Tensor>(weights); }
  const SparseMatrixCSR& sparse_weights() const {
    return std::get<SparseMatrixCSR>(weights);
  }

  // The conv-like kind that does the work (core for fused nodes).
  LayerKind compute_kind() const {
    return kind == LayerKind::kFusedConvBnAct ? core : kind;
  }

  // Number of entries a weight tensor of this layer must hold, and the
  // rows/cols of its matrix view. Zero for kinds without weights.
  std::int64_t WeightRows() const;
  std::int64_t WeightCols() const;
  Shape ExpectedDenseWeightDims() const;

  // Weights as a (rows x cols) RowMajor2D matrix regardless of encoding.
  Tensor WeightMatrix() const;

  bool BitEquals(const LayerSpec& other) const;
};

// Convenience constructors used by builders and tests.
LayerSpec MakeInput(std::uint32_t id, Shape dims);
LayerSpec MakeConv(std::uint32_t id, const ConvAttrs& attrs, Tensor weights,
                   std::optional<std::vector<float>> bias = std::nullopt);
LayerSpec MakeDepthwise(std::uint32_t id, const ConvAttrs& attrs, Tensor weights,
                        std::optional<std::vector<float>> bias = std::nullopt);
LayerSpec MakeBatchNorm(std::uint32_t id, BatchNormParams params);
LayerSpec MakeActivation(std::uint32_t id, Activation act);
LayerSpec MakePool(std::uint32_t id, const PoolAttrs& attrs);
LayerSpec MakeFullyConnected(std::uint32_t id, std::int64_t in, std::int64_t out,
                             Weights weights,
                             std::optional<std::vector<float>> bias = std::nullopt);
LayerSpec MakeAdd(std::uint32_t id);
LayerSpec MakeSoftmax(std::uint32_t id);

}  // namespace compactnn

#endif  // COMPACTNN_GRAPH_LAYER_H_
