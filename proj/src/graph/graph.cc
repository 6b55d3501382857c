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

#include "compactnn/graph/graph.h"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include "compactnn/common/error.h"
#include "compactnn/tensor/transforms.h"

namespace compactnn {

const LayerSpec* Graph::Find(std::uint32_t id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

LayerSpec* Graph::Find(std::uint32_t id) {
  for (auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const LayerSpec& Graph::Node(std::uint32_t id) const {
  const LayerSpec* n = Find(id);
  if (!n) throw ShapeError("no node with id " + std::to_string(id));
  return *n;
}

std::vector<std::uint32_t> Graph::Inputs() const {
  std::vector<std::uint32_t> ids;
  for (const auto& n : nodes)
    if (n.kind == LayerKind::kInput) ids.push_back(n.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::uint32_t> Graph::Outputs() const {
  std::set<std::uint32_t> producers;
  for (const auto& e : edges) producers.insert(e.producer);
  std::vector<std::uint32_t> ids;
  for (const auto& n : nodes)
    if (!producers.count(n.id)) ids.push_back(n.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::uint32_t> Graph::Predecessors(std::uint32_t id) const {
  std::vector<std::uint32_t> ids;
  for (const auto& e : edges)
    if (e.consumer == id) ids.push_back(e.producer);
  return ids;
}

std::vector<std::uint32_t> Graph::Successors(std::uint32_t id) const {
  std::vector<std::uint32_t> ids;
  for (const auto& e : edges)
    if (e.producer == id) ids.push_back(e.consumer);
  return ids;
}

std::uint32_t Graph::NextId() const {
  std::uint32_t next = 0;
  for (const auto& n : nodes) next = std::max(next, n.id + 1);
  return next;
}

std::uint32_t Graph::Append(LayerSpec layer,
                            const std::vector<std::uint32_t>& producers) {
  const std::uint32_t id = layer.id;
  nodes.push_back(std::move(layer));
  for (auto p : producers) edges.push_back({p, id});
  return id;
}

bool Graph::BitEquals(const Graph& other) const {
  if (nodes.size() != other.nodes.size() || edges != other.edges) return false;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!nodes[i].BitEquals(other.nodes[i])) return false;
  return true;
}

std::string FormatDiagnostic(const Diagnostic& d) {
  return "node " + std::to_string(d.node_id) + " [" + d.rule + "]: " + d.message;
}

namespace {

int ExpectedArity(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput: return 0;
    case LayerKind::kAdd: return 2;
    default: return 1;
  }
}

bool HasWeights(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2D:
    case LayerKind::kDepthwiseConv2D:
    case LayerKind::kFullyConnected:
    case LayerKind::kGemm:
    case LayerKind::kFusedConvBnAct:
      return true;
    default:
      return false;
  }
}

void CheckAttrs(const LayerSpec& n, std::vector<Diagnostic>& out) {
  auto bad = [&](const std::string& msg) { out.push_back({n.id, "attrs", msg}); };
  const auto& c = n.conv;
  switch (n.kind) {
    case LayerKind::kInput:
      if (n.input_dims.size() != 4 && n.input_dims.size() != 2)
        bad("input dims must be 4-D (NCHW) or 2-D, got " + ShapeToString(n.input_dims));
      for (auto d : n.input_dims)
        if (d < 1) bad("input extents must be positive");
      break;
    case LayerKind::kFusedConvBnAct:
      if (n.core != LayerKind::kConv2D && n.core != LayerKind::kDepthwiseConv2D)
        bad("fused core must be Conv2D or DepthwiseConv2D");
      [[fallthrough]];
    case LayerKind::kConv2D:
    case LayerKind::kDepthwiseConv2D:
      if (c.in_channels < 1 || c.out_channels < 1 || c.kernel_h < 1 ||
          c.kernel_w < 1 || c.stride < 1 || c.padding < 0)
        bad("conv extents must be positive (padding non-negative)");
      if (n.compute_kind() == LayerKind::kDepthwiseConv2D &&
          c.in_channels != c.out_channels)
        bad("depthwise conv must keep the channel count");
      break;
    case LayerKind::kGemm:
    case LayerKind::kFullyConnected:
      if (c.in_channels < 1 || c.out_channels < 1) bad("channel counts must be positive");
      break;
    case LayerKind::kBatchNorm:
      if (!n.bn) {
        bad("batchnorm without parameters");
      } else {
        const auto ch = n.bn->gamma.size();
        if (ch == 0 || n.bn->beta.size() != ch || n.bn->mean.size() != ch ||
            n.bn->var.size() != ch)
          bad("batchnorm parameter vectors must be non-empty and equal length");
        for (std::size_t i = 0; i < n.bn->var.size(); ++i)
          if (!(n.bn->var[i] + n.bn->eps > 0.0f)) {
            bad("batchnorm var + eps must be positive");
            break;
          }
      }
      break;
    case LayerKind::kPool:
      if (!n.pool.global && (n.pool.window < 1 || n.pool.stride < 1))
        bad("pool window and stride must be positive");
      break;
    default:
      break;
  }
  if (n.kind != LayerKind::kFusedConvBnAct && n.kind != LayerKind::kActivation &&
      n.kind != LayerKind::kGemm && n.activation != Activation::kIdentity)
    bad("activation attribute set on a kind that has none");
}

void CheckWeights(const LayerSpec& n, std::vector<Diagnostic>& out) {
  if (!HasWeights(n.kind)) {
    if (n.has_weights()) out.push_back({n.id, "weight-shape", "kind carries no weights"});
    if (n.bias) out.push_back({n.id, "weight-shape", "kind carries no bias"});
    return;
  }
  if (!n.has_weights()) {
    out.push_back({n.id, "weight-shape", "missing weights"});
    return;
  }
  if (n.has_dense_weights()) {
    const Shape expected = n.ExpectedDenseWeightDims();
    if (n.dense_weights().dims() != expected)
      out.push_back({n.id, "weight-shape",
                     "dense weights " + ShapeToString(n.dense_weights().dims()) +
                         ", expected " + ShapeToString(expected)});
  } else {
    const auto& s = n.sparse_weights();
    if (n.compute_kind() == LayerKind::kDepthwiseConv2D)
      out.push_back({n.id, "weight-shape", "depthwise weights must be dense"});
    else if (s.rows() != n.WeightRows() || s.cols() != n.WeightCols())
      out.push_back({n.id, "weight-shape",
                     "sparse weights " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()) + ", expected " +
                         std::to_string(n.WeightRows()) + "x" +
                         std::to_string(n.WeightCols())});
  }
  if (n.bias && static_cast<std::int64_t>(n.bias->size()) != n.WeightRows())
    out.push_back({n.id, "weight-shape", "bias length does not match output channels"});
}

// Output dims of one node from its operand dims. Throws ShapeError.
Shape InferNode(const LayerSpec& n, const std::vector<Shape>& in) {
  auto need4 = [&](const Shape& s) {
    if (s.size() != 4)
      throw ShapeError(std::string(LayerKindName(n.kind)) + " needs a 4-D input, got " +
                       ShapeToString(s));
  };
  switch (n.kind) {
    case LayerKind::kInput:
      return n.input_dims;
    case LayerKind::kConv2D:
    case LayerKind::kDepthwiseConv2D:
    case LayerKind::kFusedConvBnAct: {
      const Shape& s = in[0];
      need4(s);
      if (s[1] != n.conv.in_channels)
        throw ShapeError("input has " + std::to_string(s[1]) + " channels, layer expects " +
                         std::to_string(n.conv.in_channels));
      return {s[0], n.conv.out_channels,
              ConvOutputExtent(s[2], n.conv.kernel_h, n.conv.stride, n.conv.padding),
              ConvOutputExtent(s[3], n.conv.kernel_w, n.conv.stride, n.conv.padding)};
    }
    case LayerKind::kGemm: {
      const Shape& s = in[0];
      need4(s);
      if (s[1] != n.conv.in_channels)
        throw ShapeError("gemm input has " + std::to_string(s[1]) +
                         " channels, expects " + std::to_string(n.conv.in_channels));
      return {s[0], n.conv.out_channels, s[2], s[3]};
    }
    case LayerKind::kBatchNorm: {
      const Shape& s = in[0];
      if (s.size() < 2 || s[1] != n.bn->channels())
        throw ShapeError("batchnorm over " + std::to_string(n.bn->channels()) +
                         " channels applied to " + ShapeToString(s));
      return s;
    }
    case LayerKind::kActivation:
      return in[0];
    case LayerKind::kSoftmax:
      if (in[0].size() != 2) throw ShapeError("softmax expects a 2-D input");
      return in[0];
    case LayerKind::kPool: {
      const Shape& s = in[0];
      need4(s);
      if (n.pool.global) return {s[0], s[1], 1, 1};
      if (n.pool.window > s[2] || n.pool.window > s[3])
        throw ShapeError("pool window exceeds input " + ShapeToString(s));
      return {s[0], s[1], ConvOutputExtent(s[2], n.pool.window, n.pool.stride, 0),
              ConvOutputExtent(s[3], n.pool.window, n.pool.stride, 0)};
    }
    case LayerKind::kFullyConnected: {
      const Shape& s = in[0];
      if (s.empty()) throw ShapeError("fully connected input has no dims");
      const std::int64_t features = NumElements(s) / std::max<std::int64_t>(s[0], 1);
      if (features != n.conv.in_channels)
        throw ShapeError("fully connected expects " + std::to_string(n.conv.in_channels) +
                         " features, input " + ShapeToString(s) + " has " +
                         std::to_string(features));
      return {s[0], n.conv.out_channels};
    }
    case LayerKind::kAdd:
      if (in[0] != in[1])
        throw ShapeError("add operands differ: " + ShapeToString(in[0]) + " vs " +
                         ShapeToString(in[1]));
      return in[0];
  }
  throw ShapeError("unknown layer kind");
}

}  // namespace

std::vector<std::uint32_t> TopologicalOrder(const Graph& g) {
  std::map<std::uint32_t, int> indegree;
  for (const auto& n : g.nodes) indegree[n.id] = 0;
  for (const auto& e : g.edges) {
    if (!indegree.count(e.producer) || !indegree.count(e.consumer))
      throw CycleError("edge references an unknown node");
    ++indegree[e.consumer];
  }
  std::map<std::uint32_t, std::vector<std::uint32_t>> succ;
  for (const auto& e : g.edges) succ[e.producer].push_back(e.consumer);

  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.push(id);
  std::vector<std::uint32_t> order;
  order.reserve(indegree.size());
  while (!ready.empty()) {
    const auto id = ready.top();
    ready.pop();
    order.push_back(id);
    for (auto s : succ[id])
      if (--indegree[s] == 0) ready.push(s);
  }
  if (order.size() != indegree.size()) {
    for (const auto& [id, deg] : indegree)
      if (deg > 0) throw CycleError("graph has a cycle through node " + std::to_string(id));
  }
  return order;
}

namespace {

// Shapes of every node in topological order. On failure returns false and
// fills `failure` with the offending node.
bool InferShapesImpl(const Graph& g, std::map<std::uint32_t, Shape>& shapes,
                     Diagnostic& failure) {
  for (auto id : TopologicalOrder(g)) {
    const LayerSpec& n = g.Node(id);
    const auto preds = g.Predecessors(id);
    if (static_cast<int>(preds.size()) != ExpectedArity(n.kind)) {
      failure = {id, "arity",
                 std::string(LayerKindName(n.kind)) + ": expected " +
                     std::to_string(ExpectedArity(n.kind)) + " inputs, has " +
                     std::to_string(preds.size())};
      return false;
    }
    std::vector<Shape> in;
    for (auto p : preds) in.push_back(shapes.at(p));
    try {
      shapes[id] = InferNode(n, in);
    } catch (const ShapeError& e) {
      failure = {id, "shape-inference",
                 std::string(LayerKindName(n.kind)) + ": " + e.what()};
      return false;
    }
  }
  return true;
}

}  // namespace

std::map<std::uint32_t, Shape> InferShapes(const Graph& g) {
  std::map<std::uint32_t, Shape> shapes;
  Diagnostic failure;
  if (!InferShapesImpl(g, shapes, failure)) throw ShapeError(FormatDiagnostic(failure));
  return shapes;
}

std::vector<Diagnostic> ValidateGraph(const Graph& g) {
  std::vector<Diagnostic> out;
  std::set<std::uint32_t> ids;
  for (const auto& n : g.nodes) {
    if (!ids.insert(n.id).second)
      out.push_back({n.id, "duplicate-id", "node id appears more than once"});
  }
  for (const auto& e : g.edges) {
    if (!ids.count(e.producer) || !ids.count(e.consumer))
      out.push_back({ids.count(e.producer) ? e.consumer : e.producer, "dangling-edge",
                     "edge " + std::to_string(e.producer) + "->" +
                         std::to_string(e.consumer) + " references an unknown node"});
    else if (e.producer == e.consumer)
      out.push_back({e.producer, "cycle", "self-loop"});
  }
  if (!out.empty()) return out;

  for (const auto& n : g.nodes) {
    const auto fan_in = g.Predecessors(n.id).size();
    if (static_cast<int>(fan_in) != ExpectedArity(n.kind))
      out.push_back({n.id, "arity",
                     std::string(LayerKindName(n.kind)) + " needs " +
                         std::to_string(ExpectedArity(n.kind)) + " input(s), has " +
                         std::to_string(fan_in)});
    CheckAttrs(n, out);
    CheckWeights(n, out);
  }

  try {
    TopologicalOrder(g);
  } catch (const CycleError&) {
    // Report every node left with unresolved dependencies.
    std::map<std::uint32_t, int> indeg;
    for (const auto& n : g.nodes) indeg[n.id] = 0;
    for (const auto& ed : g.edges) ++indeg[ed.consumer];
    std::vector<std::uint32_t> stack;
    for (const auto& [id, d] : indeg)
      if (d == 0) stack.push_back(id);
    while (!stack.empty()) {
      auto id = stack.back();
      stack.pop_back();
      for (auto s : g.Successors(id))
        if (--indeg[s] == 0) stack.push_back(s);
    }
    for (const auto& [id, d] : indeg)
      if (d > 0) out.push_back({id, "cycle", "node lies on or after a cycle"});
    return out;
  }
  if (!out.empty()) return out;

  std::map<std::uint32_t, Shape> shapes;
  Diagnostic failure;
  if (!InferShapesImpl(g, shapes, failure)) out.push_back(failure);
  return out;
}

LayerTally CountLayers(const Graph& g) {
  LayerTally t;
  for (const auto& n : g.nodes) {
    if (n.kind == LayerKind::kBatchNorm)
      ++t.batchnorm;
    else if (n.kind == LayerKind::kActivation)
      ++t.activation;
    else
      ++t.layers;
  }
  return t;
}

}  // namespace compactnn
