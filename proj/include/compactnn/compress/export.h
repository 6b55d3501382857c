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

#ifndef COMPACTNN_COMPRESS_EXPORT_H_
#define COMPACTNN_COMPRESS_EXPORT_H_

#include "compactnn/compress/admm.h"
#include "compactnn/compress/trainable_net.h"
#include "compactnn/graph/graph.h"

namespace compactnn {

struct ExportOptions {
  // When set, the net must satisfy it exactly (FeasibilityError otherwise).
  const CompressionSpec* spec = nullptr;
  // Weight matrices at or above this fraction of zeros are stored as CSR.
  double csr_threshold = 0.5;
};

// Inference graph of the net: Input {1, input_shape...}, then one node per
// layer in order. The softmax head is not exported; the graph yields logits.
Graph ExportCompressed(const TrainableNet& net, const ExportOptions& options = {});

// Inverse of ExportCompressed for graphs that are a plain chain of Input,
// FullyConnected, Conv2D and ReLU nodes. Throws UnsupportedError otherwise.
TrainableNet NetFromGraph(const Graph& g);

// Magnitude-prunes every Conv2D, FullyConnected and Gemm weight matrix
// (fused nodes included, depthwise excluded) to the given fraction of
// zeros per layer, storing the result as CSR when it reaches
// `csr_threshold`. Sparse inputs are densified first.
Graph PruneGraphWeights(const Graph& g, double sparsity, double csr_threshold = 0.5);

// Same graph with every CSR weight expanded back to its dense tensor.
Graph DensifyWeights(const Graph& g);

}  // namespace compactnn

#endif  // COMPACTNN_COMPRESS_EXPORT_H_
