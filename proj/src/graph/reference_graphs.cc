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

#include "compactnn/graph/reference_graphs.h"

#include <cmath>
#include <random>

#include "compactnn/common/error.h"

namespace compactnn {

ReferenceModel ParseReferenceModel(std::string_view name) {
  if (name == "mobilenet_v1") return ReferenceModel::kMobileNetV1;
  if (name == "mobilenet_v2_stub") return ReferenceModel::kMobileNetV2Stub;
  if (name == "lenet5") return ReferenceModel::kLeNet5;
  if (name == "lenet_300_100") return ReferenceModel::kLeNet300100;
  throw UnsupportedError("unknown reference model '" + std::string(name) + "'");
}

const char* ReferenceModelName(ReferenceModel model) {
  switch (model) {
    case ReferenceModel::kMobileNetV1: return "mobilenet_v1";
    case ReferenceModel::kMobileNetV2Stub: return "mobilenet_v2_stub";
    case ReferenceModel::kLeNet5: return "lenet5";
    case ReferenceModel::kLeNet300100: return "lenet_300_100";
  }
  return "?";
}

namespace {

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  std::uint32_t Input(Shape dims) { return Add(MakeInput(next_, std::move(dims)), {}); }

  std::uint32_t Conv(std::uint32_t from, std::int64_t in, std::int64_t out, std::int64_t k,
                     std::int64_t stride, std::int64_t pad, bool bias) {
    ConvAttrs a{in, out, k, k, stride, pad};
    Tensor w = Random({out, in, k, k}, Layout::kNCHW, in * k * k);
    return Add(MakeConv(next_, a, std::move(w), bias ? std::optional<std::vector<float>>(Bias(out)) : std::nullopt), {from});
  }

  std::uint32_t Depthwise(std::uint32_t from, std::int64_t ch, std::int64_t k,
                          std::int64_t stride, std::int64_t pad) {
    ConvAttrs a{ch, ch, k, k, stride, pad};
    Tensor w = Random({ch, 1, k, k}, Layout::kNCHW, k * k);
    return Add(MakeDepthwise(next_, a, std::move(w)), {from});
  }

  std::uint32_t BatchNorm(std::uint32_t from, std::int64_t ch) {
    std::uniform_real_distribution<float> gamma(0.5f, 1.5f), shift(-0.1f, 0.1f),
        var(0.5f, 1.5f);
    BatchNormParams p;
    for (std::int64_t c = 0; c < ch; ++c) {
      p.gamma.push_back(gamma(rng_));
      p.beta.push_back(shift(rng_));
      p.mean.push_back(shift(rng_));
      p.var.push_back(var(rng_));
    }
    return Add(MakeBatchNorm(next_, std::move(p)), {from});
  }

  std::uint32_t Act(std::uint32_t from, Activation a) {
    return Add(MakeActivation(next_, a), {from});
  }

  std::uint32_t Pool(std::uint32_t from, PoolKind kind, std::int64_t window, bool global) {
    PoolAttrs p{kind, window, window, global};
    return Add(MakePool(next_, p), {from});
  }

  std::uint32_t Fc(std::uint32_t from, std::int64_t in, std::int64_t out) {
    Tensor w = Random({out, in}, Layout::kRowMajor2D, in);
    return Add(MakeFullyConnected(next_, in, out, std::move(w), Bias(out)), {from});
  }

  std::uint32_t Sum(std::uint32_t a, std::uint32_t b) { return Add(MakeAdd(next_), {a, b}); }
  std::uint32_t Softmax(std::uint32_t from) { return Add(MakeSoftmax(next_), {from}); }

  // conv -> BN -> activation, the pattern the fusion pass targets.
  std::uint32_t ConvBnAct(std::uint32_t from, std::int64_t in, std::int64_t out,
                          std::int64_t k, std::int64_t stride, Activation act) {
    auto c = Conv(from, in, out, k, stride, k / 2, false);
    auto b = BatchNorm(c, out);
    return act == Activation::kIdentity ? b : Act(b, act);
  }

  std::uint32_t DwBnAct(std::uint32_t from, std::int64_t ch, std::int64_t stride) {
    return Act(BatchNorm(Depthwise(from, ch, 3, stride, 1), ch), Activation::kRelu6);
  }

  Graph Take() { return std::move(g_); }

 private:
  std::uint32_t Add(LayerSpec l, const std::vector<std::uint32_t>& from) {
    l.id = next_++;
    return g_.Append(std::move(l), from);
  }

  Tensor Random(Shape dims, Layout layout, std::int64_t fan_in) {
    std::normal_distribution<float> d(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
    std::vector<float> data(static_cast<std::size_t>(NumElements(dims)));
    for (auto& v : data) v = d(rng_);
    return Tensor(std::move(dims), layout, std::move(data));
  }

  std::vector<float> Bias(std::int64_t n) {
    std::uniform_real_distribution<float> d(-0.05f, 0.05f);
    std::vector<float> b(static_cast<std::size_t>(n));
    for (auto& v : b) v = d(rng_);
    return b;
  }

  Graph g_;
  std::uint32_t next_ = 0;
  std::mt19937_64 rng_;
};

Graph MobileNetV1(const ReferenceOptions& o) {
  const std::int64_t res = o.resolution ? o.resolution : 224;
  Builder b(o.seed);
  auto x = b.Input({o.batch, 3, res, res});
  x = b.ConvBnAct(x, 3, 32, 3, 2, Activation::kRelu6);
  struct Block {
    std::int64_t out, stride;
  };
  const Block blocks[] = {{64, 1},  {128, 2}, {128, 1}, {256, 2}, {256, 1},
                          {512, 2}, {512, 1}, {512, 1}, {512, 1}, {512, 1},
                          {512, 1}, {1024, 2}, {1024, 1}};
  std::int64_t ch = 32;
  for (const auto& blk : blocks) {
    x = b.DwBnAct(x, ch, blk.stride);
    x = b.ConvBnAct(x, ch, blk.out, 1, 1, Activation::kRelu6);
    ch = blk.out;
  }
  x = b.Pool(x, PoolKind::kAvg, 0, true);
  x = b.Fc(x, 1024, 1000);
  b.Softmax(x);
  return b.Take();
}

// Stem plus three inverted-residual blocks (the third with its skip Add)
// and a small classifier; enough to exercise the residual pattern.
Graph MobileNetV2Stub(const ReferenceOptions& o) {
  const std::int64_t res = o.resolution ? o.resolution : 224;
  Builder b(o.seed);
  auto x = b.Input({o.batch, 3, res, res});
  x = b.ConvBnAct(x, 3, 32, 3, 2, Activation::kRelu6);
  // t=1, c=16, s=1: no expansion.
  x = b.DwBnAct(x, 32, 1);
  x = b.ConvBnAct(x, 32, 16, 1, 1, Activation::kIdentity);
  // t=6, c=24, s=2.
  x = b.ConvBnAct(x, 16, 96, 1, 1, Activation::kRelu6);
  x = b.DwBnAct(x, 96, 2);
  x = b.ConvBnAct(x, 96, 24, 1, 1, Activation::kIdentity);
  // t=6, c=24, s=1 with residual.
  auto skip = x;
  x = b.ConvBnAct(x, 24, 144, 1, 1, Activation::kRelu6);
  x = b.DwBnAct(x, 144, 1);
  x = b.ConvBnAct(x, 144, 24, 1, 1, Activation::kIdentity);
  x = b.Sum(x, skip);
  x = b.Pool(x, PoolKind::kAvg, 0, true);
  x = b.Fc(x, 24, 10);
  b.Softmax(x);
  return b.Take();
}

Graph LeNet5(const ReferenceOptions& o) {
  const std::int64_t res = o.resolution ? o.resolution : 28;
  Builder b(o.seed);
  auto x = b.Input({o.batch, 1, res, res});
  x = b.Act(b.Conv(x, 1, 6, 5, 1, 2, true), Activation::kRelu);
  x = b.Pool(x, PoolKind::kMax, 2, false);
  x = b.Act(b.Conv(x, 6, 16, 5, 1, 0, true), Activation::kRelu);
  x = b.Pool(x, PoolKind::kMax, 2, false);
  const std::int64_t side = (res / 2 - 4) / 2;
  x = b.Act(b.Fc(x, 16 * side * side, 120), Activation::kRelu);
  x = b.Act(b.Fc(x, 120, 84), Activation::kRelu);
  b.Fc(x, 84, 10);
  return b.Take();
}

Graph LeNet300100(const ReferenceOptions& o) {
  const std::int64_t res = o.resolution ? o.resolution : 28;
  Builder b(o.seed);
  auto x = b.Input({o.batch, 1, res, res});
  x = b.Act(b.Fc(x, res * res, 300), Activation::kRelu);
  x = b.Act(b.Fc(x, 300, 100), Activation::kRelu);
  b.Fc(x, 100, 10);
  return b.Take();
}

}  // namespace

Graph BuildReferenceGraph(ReferenceModel model, const ReferenceOptions& options) {
  switch (model) {
    case ReferenceModel::kMobileNetV1: return MobileNetV1(options);
    case ReferenceModel::kMobileNetV2Stub: return MobileNetV2Stub(options);
    case ReferenceModel::kLeNet5: return LeNet5(options);
    case ReferenceModel::kLeNet300100: return LeNet300100(options);
  }
  throw UnsupportedError("unknown reference model");
}

}  // namespace compactnn
