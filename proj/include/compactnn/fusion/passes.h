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

#ifndef COMPACTNN_FUSION_PASSES_H_
#define COMPACTNN_FUSION_PASSES_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "compactnn/graph/graph.h"

namespace compactnn {

struct Rewrite {
  std::string pass;
  std::vector<std::uint32_t> consumed;
  std::uint32_t produced = 0;
};

struct FusionReport {
  std::vector<Rewrite> rewrites;
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;

  // Human-readable listing, one rewrite per line plus a node-count summary.
  std::string ToText() const;
};

// Folds `bn` into the weights and bias of `conv` (Conv2D, DepthwiseConv2D
// or a fused node). The result keeps conv's id and kind. Throws ShapeError
// when the channel counts differ and ParameterError when var + eps <= 0.
LayerSpec FoldBatchNorm(const LayerSpec& conv, const LayerSpec& bn);

// Collapses Conv/Depthwise -> [BatchNorm] -> [Activation] chains whose
// intermediates have exactly one consumer into FusedConvBnAct nodes. A
// convolution with neither a BatchNorm nor an Activation after it is left
// alone. Fused nodes receive fresh ids.
std::pair<Graph, FusionReport> FuseConvBnAct(const Graph& g);

// Replaces 1x1, stride-1, unpadded Conv2D nodes (and fused nodes with such
// a core) by Gemm nodes carrying the same weights, bias and activation.
std::pair<Graph, FusionReport> RewritePointwiseConvToGemm(const Graph& g);

// Fuse, then rewrite, repeated until a round makes no rewrite.
std::pair<Graph, FusionReport> RunFusionPipeline(const Graph& g);

}  // namespace compactnn

#endif  // COMPACTNN_FUSION_PASSES_H_
