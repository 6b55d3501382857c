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

#ifndef COMPACTNN_GRAPH_GRAPH_H_
#define COMPACTNN_GRAPH_GRAPH_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "compactnn/graph/layer.h"

namespace compactnn {

struct Edge {
  std::uint32_t producer = 0;
  std::uint32_t consumer = 0;
  bool operator==(const Edge&) const = default;
};

// Layer DAG. Graph inputs are the kInput nodes; graph outputs are the nodes
// nobody consumes. Operand order of a node (matters only for Add) follows
// the order of its incoming edges in `edges`.
struct Graph {
  std::vector<LayerSpec> nodes;
  std::vector<Edge> edges;

  const LayerSpec* Find(std::uint32_t id) const;
  LayerSpec* Find(std::uint32_t id);
  const LayerSpec& Node(std::uint32_t id) const;

  std::vector<std::uint32_t> Inputs() const;
  std::vector<std::uint32_t> Outputs() const;
  std::vector<std::uint32_t> Predecessors(std::uint32_t id) const;
  std::vector<std::uint32_t> Successors(std::uint32_t id) const;
  std::uint32_t NextId() const;

  // Appends `layer` and an edge from each producer, in order.
  std::uint32_t Append(LayerSpec layer, const std::vector<std::uint32_t>& producers);

  bool BitEquals(const Graph& other) const;
};

struct Diagnostic {
  std::uint32_t node_id = 0;
  std::string rule;     // e.g. "arity", "cycle", "weight-shape"
  std::string message;
};

std::string FormatDiagnostic(const Diagnostic& d);

// Empty iff every structural, attribute, weight and shape rule holds.
std::vector<Diagnostic> ValidateGraph(const Graph& g);

// Kahn's algorithm with ties broken by ascending node id. Throws CycleError.
std::vector<std::uint32_t> TopologicalOrder(const Graph& g);

// Output dims of every node. Throws ShapeError naming the failing node.
std::map<std::uint32_t, Shape> InferShapes(const Graph& g);

// Layer count convention used for the reference topologies: every node
// counts as one layer except BatchNorm and Activation nodes, which are
// tallied separately (see LayerTally).
struct LayerTally {
  int layers = 0;
  int batchnorm = 0;
  int activation = 0;
};
LayerTally CountLayers(const Graph& g);

}  // namespace compactnn

#endif  // COMPACTNN_GRAPH_GRAPH_H_
