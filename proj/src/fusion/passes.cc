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

#include "compactnn/fusion/passes.h"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "compactnn/common/error.h"

namespace compactnn {

namespace {

bool IsConvKind(LayerKind kind) {
  return kind == LayerKind::kConv2D || kind == LayerKind::kDepthwiseConv2D;
}

// Edges leaving `id`, counted with multiplicity.
std::size_t OutDegree(const Graph& g, std::uint32_t id) {
  std::size_t n = 0;
  for (const auto& e : g.edges) n += e.producer == id;
  return n;
}

// The only consumer of `id`, or nullptr when there are zero or several.
const LayerSpec* SoleConsumer(const Graph& g, std::uint32_t id) {
  if (OutDegree(g, id) != 1) return nullptr;
  for (const auto& e : g.edges)
    if (e.producer == id) return &g.Node(e.consumer);
  return nullptr;
}

// Replaces each group of `consumed` ids by its `replacement` node, placed
// where the group's first node was. Edges between members of a group are
// dropped, and edges entering or leaving a group are redirected.
struct Replacement {
  std::vector<std::uint32_t> consumed;
  LayerSpec node;
};

Graph ApplyReplacements(const Graph& g, const std::vector<Replacement>& reps) {
  std::map<std::uint32_t, std::size_t> group_of;
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (auto id : reps[i].consumed) group_of[id] = i;

  Graph out;
  for (const auto& n : g.nodes) {
    auto it = group_of.find(n.id);
    if (it == group_of.end()) {
      out.nodes.push_back(n);
    } else if (reps[it->second].consumed.front() == n.id) {
      out.nodes.push_back(reps[it->second].node);
    }
  }
  auto map_id = [&](std::uint32_t id) {
    auto it = group_of.find(id);
    return it == group_of.end() ? id : reps[it->second].node.id;
  };
  for (const auto& e : g.edges) {
    auto pg = group_of.find(e.producer), cg = group_of.find(e.consumer);
    if (pg != group_of.end() && cg != group_of.end() && pg->second == cg->second) continue;
    out.edges.push_back({map_id(e.producer), map_id(e.consumer)});
  }
  return out;
}

std::string JoinIds(const std::vector<std::uint32_t>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + std::to_string(ids[i]);
  return s;
}

}  // namespace

std::string FusionReport::ToText() const {
  std::ostringstream os;
  for (const auto& r : rewrites)
    os << r.pass << ": [" << JoinIds(r.consumed) << "] -> " << r.produced << '\n';
  os << "rewrites: " << rewrites.size() << ", nodes: " << nodes_before << " -> " << nodes_after
     << '\n';
  return os.str();
}

LayerSpec FoldBatchNorm(const LayerSpec& conv, const LayerSpec& bn) {
  if (!IsConvKind(conv.compute_kind()))
    throw ParameterError("batchnorm can only be folded into a convolution");
  if (!bn.bn) throw ParameterError("node " + std::to_string(bn.id) + " has no batchnorm params");
  const BatchNormParams& p = *bn.bn;
  const std::int64_t channels = conv.conv.out_channels;
  if (p.channels() != channels)
    throw ShapeError("batchnorm has " + std::to_string(p.channels()) +
                     " channels, convolution produces " + std::to_string(channels));

  std::vector<float> scale(static_cast<std::size_t>(channels));
  for (std::size_t c = 0; c < scale.size(); ++c) {
    const double denom = static_cast<double>(p.var[c]) + static_cast<double>(p.eps);
    if (!(denom > 0.0)) throw ParameterError("batchnorm var + eps must be positive");
    scale[c] = static_cast<float>(static_cast<double>(p.gamma[c]) / std::sqrt(denom));
  }

  LayerSpec out = conv;
  if (conv.has_dense_weights()) {
    Tensor w = conv.dense_weights();
    const std::int64_t per_row = w.size() / channels;
    auto d = w.data();
    for (std::int64_t c = 0; c < channels; ++c)
      for (std::int64_t i = 0; i < per_row; ++i) d[c * per_row + i] *= scale[c];
    out.weights = std::move(w);
  } else if (conv.has_sparse_weights()) {
    // Row scaling keeps the pattern, except where a product rounds to zero
    // or a channel's gamma is zero; those entries leave the CSR.
    const SparseMatrixCSR& s = conv.sparse_weights();
    std::vector<float> values;
    std::vector<std::uint32_t> cols, row_ptr{0};
    for (std::int64_t r = 0; r < s.rows(); ++r) {
      for (auto q = s.row_ptr()[r]; q < s.row_ptr()[r + 1]; ++q) {
        const float v = s.values()[q] * scale[r];
        if (v != 0.0f) {
          values.push_back(v);
          cols.push_back(s.col_idx()[q]);
        }
      }
      row_ptr.push_back(static_cast<std::uint32_t>(values.size()));
    }
    out.weights = SparseMatrixCSR(s.rows(), s.cols(), std::move(values), std::move(cols),
                                  std::move(row_ptr));
  }
  std::vector<float> bias(static_cast<std::size_t>(channels));
  for (std::size_t c = 0; c < bias.size(); ++c) {
    const float b = conv.bias ? (*conv.bias)[c] : 0.0f;
    bias[c] = p.beta[c] + (b - p.mean[c]) * scale[c];
  }
  out.bias = std::move(bias);
  return out;
}

std::pair<Graph, FusionReport> FuseConvBnAct(const Graph& g) {
  FusionReport report;
  report.nodes_before = g.nodes.size();
  std::vector<Replacement> reps;
  std::uint32_t next = g.NextId();
  for (std::uint32_t id : TopologicalOrder(g)) {
    const LayerSpec& conv = g.Node(id);
    if (!IsConvKind(conv.kind)) continue;
    Replacement rep;
    rep.consumed.push_back(id);
    LayerSpec fused = conv;
    const LayerSpec* next_node = SoleConsumer(g, id);
    if (next_node && next_node->kind == LayerKind::kBatchNorm) {
      fused = FoldBatchNorm(conv, *next_node);
      rep.consumed.push_back(next_node->id);
      next_node = SoleConsumer(g, next_node->id);
    }
    if (next_node && next_node->kind == LayerKind::kActivation) {
      fused.activation = next_node->activation;
      rep.consumed.push_back(next_node->id);
    }
    if (rep.consumed.size() == 1) continue;
    fused.kind = LayerKind::kFusedConvBnAct;
    fused.core = conv.kind;
    fused.bn.reset();
    fused.id = next++;
    rep.node = std::move(fused);
    report.rewrites.push_back({"fuse_conv_bn_act", rep.consumed, rep.node.id});
    reps.push_back(std::move(rep));
  }
  Graph out = ApplyReplacements(g, reps);
  report.nodes_after = out.nodes.size();
  return {std::move(out), std::move(report)};
}

std::pair<Graph, FusionReport> RewritePointwiseConvToGemm(const Graph& g) {
  FusionReport report;
  report.nodes_before = g.nodes.size();
  std::vector<Replacement> reps;
  std::uint32_t next = g.NextId();
  for (std::uint32_t id : TopologicalOrder(g)) {
    const LayerSpec& n = g.Node(id);
    const bool conv_like = n.kind == LayerKind::kConv2D ||
                           (n.kind == LayerKind::kFusedConvBnAct &&
                            n.core == LayerKind::kConv2D);
    const ConvAttrs& a = n.conv;
    if (!conv_like || a.kernel_h != 1 || a.kernel_w != 1 || a.stride != 1 || a.padding != 0)
      continue;
    LayerSpec gemm;
    gemm.id = next++;
    gemm.kind = LayerKind::kGemm;
    gemm.conv = a;
    gemm.activation = n.activation;
    gemm.bias = n.bias;
    if (n.has_dense_weights()) {
      gemm.weights = n.dense_weights().Reshaped({a.out_channels, a.in_channels},
                                                Layout::kRowMajor2D);
    } else {
      gemm.weights = n.weights;
    }
    report.rewrites.push_back({"rewrite_pointwise_conv_to_gemm", {id}, gemm.id});
    reps.push_back({{id}, std::move(gemm)});
  }
  Graph out = ApplyReplacements(g, reps);
  report.nodes_after = out.nodes.size();
  return {std::move(out), std::move(report)};
}

std::pair<Graph, FusionReport> RunFusionPipeline(const Graph& g) {
  FusionReport report;
  report.nodes_before = g.nodes.size();
  Graph cur = g;
  while (true) {
    auto [fused, r1] = FuseConvBnAct(cur);
    auto [rewritten, r2] = RewritePointwiseConvToGemm(fused);
    const std::size_t changes = r1.rewrites.size() + r2.rewrites.size();
    report.rewrites.insert(report.rewrites.end(), r1.rewrites.begin(), r1.rewrites.end());
    report.rewrites.insert(report.rewrites.end(), r2.rewrites.begin(), r2.rewrites.end());
    cur = std::move(rewritten);
    if (changes == 0) break;
  }
  report.nodes_after = cur.nodes.size();
  return {std::move(cur), std::move(report)};
}

}  // namespace compactnn
