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

#include "compactnn/compress/export.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "compactnn/common/error.h"
#include "compactnn/compress/projection.h"

namespace compactnn {

namespace {

Layout WeightLayout(const Shape& dims) {
  return dims.size() == 4 ? Layout::kNCHW : Layout::kRowMajor2D;
}

Weights EncodeWeights(const TrainLayer& l, Shape dims, double csr_threshold) {
  const Layout layout = WeightLayout(dims);
  Tensor dense(std::move(dims), layout, l.weight);
  const auto zeros = std::count(l.weight.begin(), l.weight.end(), 0.0f);
  const double sparsity = static_cast<double>(zeros) / static_cast<double>(l.weight.size());
  if (sparsity < csr_threshold) return dense;
  return CsrFromDense(dense.Reshaped({l.weight_rows(), l.weight_cols()}, Layout::kRowMajor2D));
}

}  // namespace

Graph ExportCompressed(const TrainableNet& net, const ExportOptions& options) {
  if (net.layers().empty()) throw ParameterError("cannot export an empty net");
  if (options.spec) {
    CheckSpec(net, *options.spec);
    if (!Satisfies(net, *options.spec))
      throw FeasibilityError("net violates its compression spec; run masked retraining first");
  }
  Graph g;
  Shape in_dims{1};
  for (auto d : net.input_shape()) in_dims.push_back(d);
  std::uint32_t prev = g.Append(MakeInput(0, in_dims), {});
  std::uint32_t id = 1;
  for (const auto& l : net.layers()) {
    LayerSpec node;
    switch (l.kind) {
      case TrainLayerKind::kRelu:
        node = MakeActivation(id, Activation::kRelu);
        break;
      case TrainLayerKind::kFullyConnected:
        node = MakeFullyConnected(
            id, l.conv.in_channels, l.conv.out_channels,
            EncodeWeights(l, {l.conv.out_channels, l.conv.in_channels}, options.csr_threshold),
            l.bias);
        break;
      case TrainLayerKind::kConv2D: {
        const auto& c = l.conv;
        node = MakeConv(id, c, Tensor{}, l.bias);
        node.weights = EncodeWeights(l, {c.out_channels, c.in_channels, c.kernel_h, c.kernel_w},
                                     options.csr_threshold);
        break;
      }
    }
    prev = g.Append(std::move(node), {prev});
    ++id;
  }
  return g;
}

TrainableNet NetFromGraph(const Graph& g) {
  const auto order = TopologicalOrder(g);
  if (order.empty() || g.Node(order[0]).kind != LayerKind::kInput)
    throw UnsupportedError("graph does not start with an input node");
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto preds = g.Predecessors(order[i]);
    if (preds.size() != 1 || preds[0] != order[i - 1] || g.Successors(order[i - 1]).size() != 1)
      throw UnsupportedError("only plain layer chains convert to a trainable net");
  }
  const Shape& in = g.Node(order[0]).input_dims;
  if (in.size() < 2) throw UnsupportedError("input node needs a batch extent and sample dims");
  TrainableNet net(Shape(in.begin() + 1, in.end()));
  for (std::size_t i = 1; i < order.size(); ++i) {
    const LayerSpec& n = g.Node(order[i]);
    switch (n.kind) {
      case LayerKind::kActivation:
        if (n.activation != Activation::kRelu)
          throw UnsupportedError(std::string("activation ") + ActivationName(n.activation) +
                                 " has no trainable counterpart");
        net.AddRelu();
        continue;
      case LayerKind::kFullyConnected:
        net.AddFullyConnected(n.conv.out_channels);
        break;
      case LayerKind::kConv2D:
        if (n.conv.kernel_h != n.conv.kernel_w)
          throw UnsupportedError("trainable conv needs a square kernel");
        net.AddConv2D(n.conv.out_channels, n.conv.kernel_h, n.conv.stride, n.conv.padding);
        break;
      default:
        throw UnsupportedError(std::string("layer kind ") + LayerKindName(n.kind) +
                               " has no trainable counterpart");
    }
    auto& l = net.layers().back();
    if (l.weight_cols() != n.WeightCols())
      throw ShapeError("node " + std::to_string(n.id) + " weights do not chain with its input");
    const Tensor w = n.WeightMatrix();
    l.weight.assign(w.data().begin(), w.data().end());
    if (n.bias) l.bias = *n.bias;
  }
  return net;
}

Graph DensifyWeights(const Graph& g) {
  Graph out = g;
  for (auto& n : out.nodes)
    if (n.has_sparse_weights()) {
      const Shape dims = n.ExpectedDenseWeightDims();
      n.weights = CsrToDense(n.sparse_weights()).Reshaped(dims, WeightLayout(dims));
    }
  return out;
}

Graph PruneGraphWeights(const Graph& g, double sparsity, double csr_threshold) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw ParameterError("sparsity must be in [0, 1)");
  Graph out = DensifyWeights(g);
  for (auto& n : out.nodes) {
    const LayerKind k = n.compute_kind();
    if (!n.has_dense_weights() ||
        (k != LayerKind::kConv2D && k != LayerKind::kFullyConnected && k != LayerKind::kGemm))
      continue;
    const Tensor& w = n.dense_weights();
    const auto size = static_cast<double>(w.size());
    const auto keep = std::max<std::int64_t>(1, std::llround((1.0 - sparsity) * size));
    const std::vector<float> pruned = ProjectSparsity(w.data(), keep);
    const auto zeros = std::count(pruned.begin(), pruned.end(), 0.0f);
    Tensor dense(w.dims(), w.layout(), pruned);
    if (static_cast<double>(zeros) / size >= csr_threshold)
      n.weights = CsrFromDense(dense.Reshaped({n.WeightRows(), n.WeightCols()}, Layout::kRowMajor2D));
    else
      n.weights = std::move(dense);
  }
  return out;
}

}  // namespace compactnn
