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

#include "compactnn/engine/executor.h"

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "compactnn/common/error.h"
#include "compactnn/engine/kernels.h"
#include "compactnn/tensor/transforms.h"

namespace compactnn {

namespace {

// Free storage from dead intermediates, handed out best-fit.
class BufferPool {
 public:
  // Contents of the returned vector are unspecified.
  std::vector<float> Take(std::size_t n) {
    auto best = free_.end();
    for (auto it = free_.begin(); it != free_.end(); ++it) {
      if (it->capacity() >= n && (best == free_.end() || it->capacity() < best->capacity()))
        best = it;
    }
    std::vector<float> v;
    if (best != free_.end()) {
      v = std::move(*best);
      free_.erase(best);
    }
    v.resize(n);
    return v;
  }
  void Give(std::vector<float>&& v) {
    if (v.capacity() > 0) free_.push_back(std::move(v));
  }

 private:
  std::vector<std::vector<float>> free_;
};

bool IsPointwise(const ConvAttrs& c) {
  return c.kernel_h == 1 && c.kernel_w == 1 && c.stride == 1 && c.padding == 0;
}

ShapeKey KeyFor(const LayerSpec& node, std::int64_t m, std::int64_t n, std::int64_t k) {
  ShapeKey key;
  key.m = m;
  key.n = n;
  key.k = k;
  if (node.has_sparse_weights()) {
    key.kind = KernelKind::kSpmm;
    key.sparsity_bucket = SparsityBucket(node.sparse_weights().sparsity());
  }
  return key;
}

KernelConfig ConfigFor(const ConfigSource* configs, const ShapeKey& key) {
  if (configs != nullptr) {
    if (auto cfg = configs->Lookup(key)) return *cfg;
  }
  return DefaultKernelConfig();
}

class Runner {
 public:
  Runner(const Graph& g, const ExecuteOptions& options) : g_(g), opts_(options) {}

  Tensor Run(const Tensor& input);

 private:
  Tensor RunNode(const LayerSpec& node, const std::vector<std::uint32_t>& preds,
                 LoadCounter* counter);
  Tensor RunConv(const LayerSpec& node, const Tensor& x, LoadCounter* counter);
  Tensor RunGemm(const LayerSpec& node, const Tensor& x, LoadCounter* counter);
  Tensor RunFullyConnected(const LayerSpec& node, const Tensor& x, LoadCounter* counter);
  Tensor RunBatchNorm(const LayerSpec& node, Tensor x);
  static void Softmax(Tensor& x);

  // C (m x n) = W * X for the node's weights, dense or sparse.
  void MatMul(const LayerSpec& node, const float* x, float* c, std::int64_t m, std::int64_t n,
              std::int64_t k, LoadCounter* counter);
  // Operand `i` of the current node, moved out when this is its last use.
  Tensor TakeOperand(std::uint32_t id);
  const Tensor& Operand(std::uint32_t id) const { return values_.at(id); }
  void Release(std::uint32_t id);

  const Graph& g_;
  const ExecuteOptions& opts_;
  BufferPool pool_;
  std::map<std::uint32_t, Tensor> values_;
  std::map<std::uint32_t, int> remaining_uses_;
};

void Runner::MatMul(const LayerSpec& node, const float* x, float* c, std::int64_t m,
                    std::int64_t n, std::int64_t k, LoadCounter* counter) {
  const KernelConfig cfg = ConfigFor(opts_.configs, KeyFor(node, m, n, k));
  std::span<const float> xs(x, static_cast<std::size_t>(k * n));
  std::span<float> cs(c, static_cast<std::size_t>(m * n));
  if (node.has_sparse_weights()) {
    SpmmCsrTiled(node.sparse_weights(), xs, cs, n, cfg, opts_.threads, counter);
  } else {
    GemmTiled(node.dense_weights().data(), xs, cs, m, n, k, cfg, opts_.threads, counter);
  }
}

Tensor Runner::RunConv(const LayerSpec& node, const Tensor& x, LoadCounter* counter) {
  const ConvAttrs& a = node.conv;
  if (x.rank() != 4 || x.dim(1) != a.in_channels)
    throw ShapeError("conv expects (N," + std::to_string(a.in_channels) + ",H,W), got " +
                     ShapeToString(x.dims()));
  if (node.compute_kind() == LayerKind::kDepthwiseConv2D) {
    if (!node.has_dense_weights()) throw UnsupportedError("depthwise weights must be dense");
    return DepthwiseConv2d(x, node.dense_weights(), node.bias, a.stride, a.padding, counter);
  }
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t ho = ConvOutputExtent(h, a.kernel_h, a.stride, a.padding);
  const std::int64_t wo = ConvOutputExtent(w, a.kernel_w, a.stride, a.padding);
  const std::int64_t k_out = a.out_channels;
  const std::int64_t reduce = c * a.kernel_h * a.kernel_w;
  const std::int64_t plane = ho * wo;
  std::vector<float> out = pool_.Take(static_cast<std::size_t>(n * k_out * plane));
  const bool pointwise = IsPointwise(a);
  std::vector<float> cols;
  if (!pointwise) cols = pool_.Take(static_cast<std::size_t>(reduce * plane));
  const float* xs = x.data().data();
  for (std::int64_t img = 0; img < n; ++img) {
    const float* image = xs + img * c * h * w;
    const float* operand = image;
    if (!pointwise) {
      Im2ColInto(image, c, h, w, a.kernel_h, a.kernel_w, a.stride, a.padding, cols.data());
      operand = cols.data();
    }
    float* dst = out.data() + img * k_out * plane;
    MatMul(node, operand, dst, k_out, plane, reduce, counter);
    if (node.bias) {
      for (std::int64_t oc = 0; oc < k_out; ++oc) {
        const float b = (*node.bias)[static_cast<std::size_t>(oc)];
        float* row = dst + oc * plane;
        for (std::int64_t p = 0; p < plane; ++p) row[p] += b;
      }
    }
  }
  pool_.Give(std::move(cols));
  return Tensor({n, k_out, ho, wo}, Layout::kNCHW, std::move(out));
}

Tensor Runner::RunGemm(const LayerSpec& node, const Tensor& x, LoadCounter* counter) {
  const ConvAttrs& a = node.conv;
  if (x.rank() != 4 || x.dim(1) != a.in_channels)
    throw ShapeError("gemm expects (N," + std::to_string(a.in_channels) + ",H,W), got " +
                     ShapeToString(x.dims()));
  const std::int64_t n = x.dim(0), plane = x.dim(2) * x.dim(3);
  std::vector<float> out = pool_.Take(static_cast<std::size_t>(n * a.out_channels * plane));
  for (std::int64_t img = 0; img < n; ++img) {
    float* dst = out.data() + img * a.out_channels * plane;
    MatMul(node, x.data().data() + img * a.in_channels * plane, dst, a.out_channels, plane,
           a.in_channels, counter);
    if (node.bias) {
      for (std::int64_t oc = 0; oc < a.out_channels; ++oc) {
        const float b = (*node.bias)[static_cast<std::size_t>(oc)];
        for (std::int64_t p = 0; p < plane; ++p) dst[oc * plane + p] += b;
      }
    }
  }
  return Tensor({n, a.out_channels, x.dim(2), x.dim(3)}, Layout::kNCHW, std::move(out));
}

Tensor Runner::RunFullyConnected(const LayerSpec& node, const Tensor& x, LoadCounter* counter) {
  const std::int64_t in = node.conv.in_channels, out_f = node.conv.out_channels;
  if (x.rank() == 0 || x.dim(0) < 1 || x.size() != x.dim(0) * in)
    throw ShapeError("fully connected expects " + std::to_string(in) + " features per row, got " +
                     ShapeToString(x.dims()));
  const std::int64_t batch = x.dim(0);
  // W (out x in) times X^T (in x batch). A single row needs no transpose.
  std::vector<float> xt;
  const float* operand = x.data().data();
  if (batch > 1) {
    xt = pool_.Take(static_cast<std::size_t>(in * batch));
    for (std::int64_t b = 0; b < batch; ++b)
      for (std::int64_t f = 0; f < in; ++f) xt[f * batch + b] = operand[b * in + f];
    operand = xt.data();
  }
  std::vector<float> prod = pool_.Take(static_cast<std::size_t>(out_f * batch));
  MatMul(node, operand, prod.data(), out_f, batch, in, counter);
  std::vector<float> out = pool_.Take(static_cast<std::size_t>(batch * out_f));
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t o = 0; o < out_f; ++o) {
      float v = prod[o * batch + b];
      if (node.bias) v += (*node.bias)[static_cast<std::size_t>(o)];
      out[b * out_f + o] = v;
    }
  pool_.Give(std::move(xt));
  pool_.Give(std::move(prod));
  return Tensor({batch, out_f}, Layout::kRowMajor2D, std::move(out));
}

Tensor Runner::RunBatchNorm(const LayerSpec& node, Tensor x) {
  const BatchNormParams& bn = *node.bn;
  if (x.rank() < 2 || x.dim(1) != bn.channels())
    throw ShapeError("batchnorm over " + std::to_string(bn.channels()) + " channels applied to " +
                     ShapeToString(x.dims()));
  const std::int64_t channels = x.dim(1);
  const std::int64_t inner = x.size() / (x.dim(0) * channels);
  auto d = x.data();
  for (std::int64_t n = 0; n < x.dim(0); ++n)
    for (std::int64_t c = 0; c < channels; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const float scale = bn.gamma[ci] / std::sqrt(bn.var[ci] + bn.eps);
      const float mean = bn.mean[ci], shift = bn.beta[ci];
      float* p = d.data() + (n * channels + c) * inner;
      for (std::int64_t i = 0; i < inner; ++i) p[i] = (p[i] - mean) * scale + shift;
    }
  return x;
}

void Runner::Softmax(Tensor& x) {
  if (x.rank() != 2) throw ShapeError("softmax expects a 2-D input");
  const std::int64_t cols = x.dim(1);
  auto d = x.data();
  for (std::int64_t r = 0; r < x.dim(0); ++r) {
    float* row = d.data() + r * cols;
    float mx = row[0];
    for (std::int64_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::int64_t j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (std::int64_t j = 0; j < cols; ++j) row[j] *= inv;
  }
}

Tensor Runner::TakeOperand(std::uint32_t id) {
  auto it = values_.find(id);
  if (remaining_uses_[id] == 1) {
    Tensor t = std::move(it->second);
    values_.erase(it);
    return t;
  }
  return it->second;
}

void Runner::Release(std::uint32_t id) {
  if (--remaining_uses_[id] > 0) return;
  auto it = values_.find(id);
  if (it == values_.end()) return;
  pool_.Give(it->second.release());
  values_.erase(it);
}

Tensor Runner::RunNode(const LayerSpec& node, const std::vector<std::uint32_t>& preds,
                       LoadCounter* counter) {
  switch (node.kind) {
    case LayerKind::kInput:
      throw ExecutionError("unexpected input node");
    case LayerKind::kConv2D:
    case LayerKind::kDepthwiseConv2D:
      return RunConv(node, Operand(preds[0]), counter);
    case LayerKind::kFusedConvBnAct: {
      Tensor y = RunConv(node, Operand(preds[0]), counter);
      if (node.bn) y = RunBatchNorm(node, std::move(y));
      ApplyActivation(y.data(), node.activation);
      return y;
    }
    case LayerKind::kGemm: {
      Tensor y = RunGemm(node, Operand(preds[0]), counter);
      ApplyActivation(y.data(), node.activation);
      return y;
    }
    case LayerKind::kFullyConnected:
      return RunFullyConnected(node, Operand(preds[0]), counter);
    case LayerKind::kBatchNorm:
      return RunBatchNorm(node, TakeOperand(preds[0]));
    case LayerKind::kActivation: {
      Tensor y = TakeOperand(preds[0]);
      ApplyActivation(y.data(), node.activation);
      return y;
    }
    case LayerKind::kPool: {
      const Tensor& x = Operand(preds[0]);
      if (node.pool.global) return GlobalPool(x, node.pool.kind);
      return Pool2d(x, node.pool.kind, node.pool.window, node.pool.stride);
    }
    case LayerKind::kAdd: {
      if (preds.size() != 2) throw ShapeError("add needs two operands");
      Tensor a = TakeOperand(preds[0]);
      // A node feeding both operands has two pending uses, so `a` was copied.
      const Tensor& b = Operand(preds[1]);
      if (a.dims() != b.dims())
        throw ShapeError("add operands differ: " + ShapeToString(a.dims()) + " vs " +
                         ShapeToString(b.dims()));
      auto ad = a.data();
      const auto bd = b.data();
      for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += bd[i];
      return a;
    }
    case LayerKind::kSoftmax: {
      Tensor y = TakeOperand(preds[0]);
      Softmax(y);
      return y;
    }
  }
  throw ExecutionError("unknown layer kind");
}

Tensor Runner::Run(const Tensor& input) {
  const auto inputs = g_.Inputs();
  const auto outputs = g_.Outputs();
  if (inputs.size() != 1) throw ExecutionError("graph must have exactly one input node");
  if (outputs.size() != 1) throw ExecutionError("graph must have exactly one output node");

  const LayerSpec& in_node = g_.Node(inputs[0]);
  Tensor x = input.layout() == Layout::kNHWC ? TransformLayout(input, Layout::kNCHW) : input;
  const Shape& declared = in_node.input_dims;
  bool ok = x.rank() == declared.size() && x.rank() >= 1;
  for (std::size_t i = 1; ok && i < declared.size(); ++i) ok = x.dim(i) == declared[i];
  if (!ok)
    throw ExecutionError("node " + std::to_string(in_node.id) + " (Input): input dims " +
                         ShapeToString(x.dims()) + " do not match declared " +
                         ShapeToString(declared));

  for (const auto& e : g_.edges) ++remaining_uses_[e.producer];
  // The graph output is never recycled.
  remaining_uses_[outputs[0]] += 1;

  for (std::uint32_t id : TopologicalOrder(g_)) {
    const LayerSpec& node = g_.Node(id);
    if (node.kind == LayerKind::kInput) {
      values_[id] = x;
      continue;
    }
    const auto preds = g_.Predecessors(id);
    LoadCounter counter;
    LoadCounter* counter_ptr = opts_.profile != nullptr ? &counter : nullptr;
    const auto start = std::chrono::steady_clock::now();
    Tensor y;
    try {
      y = RunNode(node, preds, counter_ptr);
    } catch (const ExecutionError&) {
      throw;
    } catch (const Error& e) {
      throw ExecutionError("node " + std::to_string(id) + " (" + LayerKindName(node.kind) +
                           "): " + e.what());
    }
    const auto stop = std::chrono::steady_clock::now();
    if (opts_.profile != nullptr) {
      opts_.profile->push_back(
          {id, node.kind, std::chrono::duration<double, std::micro>(stop - start).count(),
           counter.weight_loads});
    }
    for (auto p : preds) Release(p);
    values_[id] = std::move(y);
  }
  return std::move(values_.at(outputs[0]));
}

}  // namespace

std::string FormatProfile(const std::vector<LayerProfile>& profile) {
  std::ostringstream os;
  for (const auto& p : profile)
    os << p.node_id << '\t' << LayerKindName(p.kind) << '\t' << p.micros << '\t'
       << p.weight_loads << '\n';
  return os.str();
}

Tensor ExecuteGraph(const Graph& g, const Tensor& input, const ExecuteOptions& options) {
  Runner runner(g, options);
  return runner.Run(input);
}

std::vector<NodeShapeKey> CollectShapeKeys(const Graph& g) {
  const auto shapes = InferShapes(g);
  std::vector<NodeShapeKey> keys;
  for (std::uint32_t id : TopologicalOrder(g)) {
    const LayerSpec& node = g.Node(id);
    const auto preds = g.Predecessors(id);
    if (!node.has_weights() || preds.empty()) continue;
    const Shape& in = shapes.at(preds[0]);
    const Shape& out = shapes.at(id);
    switch (node.kind) {
      case LayerKind::kConv2D:
      case LayerKind::kFusedConvBnAct:
        if (node.compute_kind() == LayerKind::kDepthwiseConv2D) break;
        keys.push_back({id, KeyFor(node, node.conv.out_channels, out[2] * out[3],
                                   node.WeightCols())});
        break;
      case LayerKind::kGemm:
        keys.push_back({id, KeyFor(node, node.conv.out_channels, in[2] * in[3],
                                   node.conv.in_channels)});
        break;
      case LayerKind::kFullyConnected:
        keys.push_back({id, KeyFor(node, node.conv.out_channels, in[0], node.conv.in_channels)});
        break;
      default:
        break;
    }
  }
  return keys;
}

void PackSparseWeights(Graph& g, const ConfigSource* configs) {
  for (const auto& nk : CollectShapeKeys(g)) {
    LayerSpec& node = *g.Find(nk.node_id);
    if (!node.has_sparse_weights()) continue;
    node.weights = PackWeightsTiled(node.sparse_weights(), ConfigFor(configs, nk.key));
  }
}

}  // namespace compactnn
