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

#ifndef COMPACTNN_ENGINE_EXECUTOR_H_
#define COMPACTNN_ENGINE_EXECUTOR_H_

#include <cstdint>
#include <string>
#include <vector>

#include "compactnn/engine/kernel_config.h"
#include "compactnn/graph/graph.h"
#include "compactnn/tensor/tensor.h"

namespace compactnn {

struct LayerProfile {
  std::uint32_t node_id = 0;
  LayerKind kind = LayerKind::kInput;
  double micros = 0.0;
  std::uint64_t weight_loads = 0;
};

// One line per layer: node_id, kind, micros, weight_loads, tab separated.
std::string FormatProfile(const std::vector<LayerProfile>& profile);

struct ExecuteOptions {
  int threads = 1;
  // Per-shape kernel configs; the default config is used on a miss or
  // when no source is given.
  const ConfigSource* configs = nullptr;
  // When set, receives one record per executed node. Weight-bearing
  // layers then run their instrumented kernel variants.
  std::vector<LayerProfile>* profile = nullptr;
};

// Runs `g` on `input` in topological order and returns the single graph
// output. The input may differ from the declared input dims in the batch
// extent only. Any failure is reported as ExecutionError naming the node.
Tensor ExecuteGraph(const Graph& g, const Tensor& input, const ExecuteOptions& options = {});

// Kernel invocation shape of a weight-bearing node for a given batch,
// using the shapes inferred for the graph's declared input. Depthwise
// convolutions and weightless nodes have no key.
struct NodeShapeKey {
  std::uint32_t node_id = 0;
  ShapeKey key;
};
std::vector<NodeShapeKey> CollectShapeKeys(const Graph& g);

// Attaches a tile packing matching each sparse layer's config (looked up
// in `configs`, default otherwise) so execution takes the packed path.
void PackSparseWeights(Graph& g, const ConfigSource* configs);

}  // namespace compactnn

#endif  // COMPACTNN_ENGINE_EXECUTOR_H_
