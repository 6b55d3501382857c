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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "compactnn/common/error.h"
#include "compactnn/common/numeric.h"
#include "compactnn/compress/admm.h"
#include "compactnn/compress/export.h"
#include "compactnn/compress/projection.h"
#include "compactnn/compress/training.h"
#include "compactnn/engine/executor.h"
#include "test_util.h"

using namespace compactnn;
using namespace compactnn::testing;

namespace {

// Gaussian blobs around per-class centers, which a small net separates
// in a few epochs.
Dataset Blobs(Shape sample_shape, int classes, std::int64_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset d;
  d.sample_shape = std::move(sample_shape);
  const std::int64_t f = d.sample_size();
  std::mt19937_64 centers_rng(1234);
  std::vector<std::vector<float>> centers;
  for (int c = 0; c < classes; ++c) centers.push_back(RandomValues(f, centers_rng, -2.0f, 2.0f));
  std::normal_distribution<float> noise(0.0f, 0.5f);
  for (std::int64_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % classes);
    for (std::int64_t j = 0; j < f; ++j) d.images.push_back(centers[label][j] + noise(rng));
    d.labels.push_back(label);
  }
  return d;
}

TrainableNet SmallFc(std::uint64_t seed) {
  TrainableNet net({12});
  net.AddFullyConnected(16);
  net.AddRelu();
  net.AddFullyConnected(3);
  net.InitializeHe(seed);
  return net;
}

TrainableNet SmallConv(std::uint64_t seed) {
  TrainableNet net({2, 5, 5});
  net.AddConv2D(3, 3, 1, 1);
  net.AddRelu();
  net.AddConv2D(4, 3, 2, 0);
  net.AddRelu();
  net.AddFullyConnected(3);
  net.InitializeHe(seed);
  return net;
}

AdmmSchedule QuickSchedule() {
  AdmmSchedule s;
  s.epochs_per_update = 1;
  s.iterations_per_stage = 2;
  s.sgd.lr = 0.02;
  s.sgd.batch_size = 16;
  return s;
}

std::int64_t Nnz(std::span<const float> w) {
  return std::count_if(w.begin(), w.end(), [](float v) { return v != 0.0f; });
}

// Central differences on every parameter of the double-precision copy.
double WorstGradientError(const TrainableNet& net, const Dataset& data, std::int64_t batch) {
  auto d = net.Cast<double>();
  std::vector<double> x(data.images.begin(), data.images.begin() + batch * data.sample_size());
  std::span<const std::int32_t> labels(data.labels.data(), batch);
  d.ForwardBackward(x.data(), labels, batch);
  double worst = 0.0;
  const double h = 1e-6;
  for (auto& l : d.layers()) {
    if (!l.has_params()) continue;
    auto check = [&](std::vector<double>& p, const std::vector<double>& g) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + h;
        const double up = d.ForwardBackward(x.data(), labels, batch);
        p[i] = saved - h;
        const double down = d.ForwardBackward(x.data(), labels, batch);
        p[i] = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-3, std::abs(fd) + std::abs(g[i])));
      }
    };
    // ForwardBackward overwrites the gradients, so snapshot them first.
    d.ForwardBackward(x.data(), labels, batch);
    const auto gw = l.grad_weight, gb = l.grad_bias;
    check(l.weight, gw);
    check(l.bias, gb);
  }
  return worst;
}

}  // namespace

TEST_CASE("forward_backward") {
  SUBCASE("zero weights give ln(classes)") {
    TrainableNet net({6});
    net.AddFullyConnected(5);
    const Dataset d = Blobs({6}, 5, 10, 1);
    CHECK(net.ForwardBackward(d.images.data(), d.labels, d.size()) ==
          doctest::Approx(std::log(5.0)).epsilon(1e-7));
  }
  SUBCASE("gradients match finite differences for fc, conv and relu") {
    CHECK(WorstGradientError(SmallFc(3), Blobs({12}, 3, 6, 2), 6) <= 1e-4);
    CHECK(WorstGradientError(SmallConv(4), Blobs({2, 5, 5}, 3, 4, 3), 4) <= 1e-4);
    // Ten parameters: 3 -> 2 -> relu -> 2.
    TrainableNet tiny({3});
    tiny.AddFullyConnected(2);
    tiny.AddRelu();
    tiny.AddFullyConnected(2);
    tiny.InitializeHe(5);
    CHECK(WorstGradientError(tiny, Blobs({3}, 2, 4, 4), 4) <= 1e-4);
  }
  SUBCASE("duplicating the batch leaves the loss unchanged") {
    TrainableNet net = SmallFc(6);
    Dataset d = Blobs({12}, 3, 8, 5);
    const double once = net.ForwardBackward(d.images.data(), d.labels, 8);
    Dataset twice = d;
    twice.images.insert(twice.images.end(), d.images.begin(), d.images.end());
    twice.labels.insert(twice.labels.end(), d.labels.begin(), d.labels.end());
    CHECK(net.ForwardBackward(twice.images.data(), twice.labels, 16) ==
          doctest::Approx(once).epsilon(1e-6));
  }
}

TEST_CASE("train_dense") {
  const Dataset train = Blobs({12}, 3, 240, 7), held = Blobs({12}, 3, 60, 8);
  SUBCASE("zero learning rate changes nothing") {
    TrainableNet net = SmallFc(9);
    const TrainableNet before = net;
    TrainOptions o;
    o.epochs = 3;
    o.sgd.lr = 0.0;
    TrainDense(net, train, held, o);
    CHECK(net.BitEquals(before));
  }
  SUBCASE("same seed, same weights; training learns the blobs") {
    TrainOptions o;
    o.epochs = 5;
    TrainableNet a = SmallFc(9), b = SmallFc(9);
    const auto ra = TrainDense(a, train, held, o);
    TrainDense(b, train, held, o);
    CHECK(a.BitEquals(b));
    CHECK(ra.accuracy >= 0.9);
    CHECK(ra.epoch_loss.size() == 5);
    CHECK(ra.epoch_loss.back() < ra.epoch_loss.front());
  }
}

TEST_CASE("project_sparsity") {
  const std::vector<float> w{0.5f, -0.1f, 0.3f, 0.05f};
  CHECK(ProjectSparsity(w, 2) == std::vector<float>{0.5f, 0, 0.3f, 0});
  CHECK(ProjectSparsity(w, 4) == w);
  CHECK(ProjectSparsity(std::vector<float>{1, -1}, 1) == std::vector<float>{1, 0});
  CHECK_THROWS_AS(ProjectSparsity(w, 0), ParameterError);
  CHECK_THROWS_AS(ProjectSparsity(w, 5), ParameterError);
}

TEST_CASE("project_sparsity is optimal over every support") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + trial % 12;
    auto w = RandomValues(n, rng);
    if (trial % 5 == 0) w[0] = -w[n - 1];  // magnitude tie
    for (std::size_t k = 1; k <= n; ++k) {
      const auto p = ProjectSparsity(w, static_cast<std::int64_t>(k));
      double got = 0.0;
      for (std::size_t i = 0; i < n; ++i) got += (double(w[i]) - p[i]) * (double(w[i]) - p[i]);
      double best = INFINITY;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
        double dist = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          if (!(mask >> i & 1)) dist += double(w[i]) * w[i];
        best = std::min(best, dist);
      }
      CHECK(got <= best + 1e-12);
      CHECK(Nnz(p) <= static_cast<std::int64_t>(k));
    }
  }
}

TEST_CASE("project_quantization") {
  const std::vector<float> levels{-1, 0, 1};
  CHECK(ProjectQuantization(std::vector<float>{0.4f, 0.6f, -0.7f}, levels) ==
        std::vector<float>{0, 1, -1});
  CHECK(ProjectQuantization(std::vector<float>{1, 0, -1, 1}, levels) ==
        std::vector<float>{1, 0, -1, 1});
  CHECK(ProjectQuantization(std::vector<float>{0.5f}, std::vector<float>{0, 1}) ==
        std::vector<float>{0});
  CHECK(ProjectQuantization(std::vector<float>{-0.5f}, std::vector<float>{-1, 0}) ==
        std::vector<float>{0});
  CHECK_THROWS_AS(ProjectQuantization(std::vector<float>{1}, std::vector<float>{}), ParameterError);
  CHECK_THROWS_AS(ProjectQuantization(std::vector<float>{1}, std::vector<float>{1, 0}), ParameterError);

  SUBCASE("nearest level is the projection onto the product set") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
      auto lv = RandomValues(2 + trial % 3, rng);
      std::sort(lv.begin(), lv.end());
      const auto w = RandomValues(3, rng, -1.5f, 1.5f);
      const auto p = ProjectQuantization(w, lv);
      double got = 0.0;
      for (int i = 0; i < 3; ++i) got += (double(w[i]) - p[i]) * (double(w[i]) - p[i]);
      double best = INFINITY;
      for (float a : lv)
        for (float b : lv)
          for (float c : lv) {
            auto sq = [](float v, float l) { return (double(v) - l) * (double(v) - l); };
            const double d = sq(w[0], a) + sq(w[1], b) + sq(w[2], c);
            best = std::min(best, d);
          }
      CHECK(got <= best + 1e-12);
    }
  }
  SUBCASE("symmetric levels") {
    const auto l = SymmetricLevels(7.0f, 4);
    CHECK(l.size() == 15);
    CHECK(l.front() == -7.0f);
    CHECK(l.back() == 7.0f);
    CHECK(std::find(l.begin(), l.end(), 0.0f) != l.end());
    CHECK(SymmetricLevels(0.0f, 4) == std::vector<float>{0.0f});
    CHECK_THROWS_AS(SymmetricLevels(1.0f, 1), ParameterError);
    std::mt19937_64 rng(1);
    CHECK(AllInLevels(ProjectQuantization(RandomValues(50, rng, -9.0f, 9.0f), l), l));
  }
}

TEST_CASE("admm") {
  const Dataset train = Blobs({12}, 3, 120, 12);
  SUBCASE("no constraint gives zero residual") {
    TrainableNet net = SmallFc(13);
    PruneSpec spec;
    for (auto i : net.param_layers()) spec.retain_k.push_back(net.layers()[i].weight.size());
    const auto r = AdmmCompress(net, spec, train, nullptr, QuickSchedule());
    for (const auto& h : r.history) CHECK(h.residual == 0.0);
    CHECK(std::isnan(r.history[0].accuracy));
  }
  SUBCASE("dual update identity") {
    std::vector<float> x{1.5f, -2.0f, 0.25f}, z{1.0f, 0.0f, 0.25f}, u{0.1f, 0.2f, -0.3f};
    const auto u0 = u;
    DualUpdate(x, z, u);
    for (int i = 0; i < 3; ++i) CHECK(u[i] - u0[i] == x[i] - z[i]);
    CHECK_THROWS_AS(DualUpdate(x, z, std::span<float>(u.data(), 2)), ShapeError);
  }
  SUBCASE("z is feasible after every iteration and the dual tracks x - z") {
    TrainableNet net = SmallFc(14);
    const PruneSpec spec = UniformPruneSpec(net, 0.25);
    AdmmSchedule s = QuickSchedule();
    s.iterations_per_stage = 1;
    for (int stages = 1; stages <= 3; ++stages) {
      TrainableNet copy = net;
      s.rho_stages = stages;
      const auto r = AdmmCompress(copy, spec, train, &train, s);
      CHECK(r.history.size() == static_cast<std::size_t>(stages));
      const auto params = copy.param_layers();
      for (std::size_t p = 0; p < params.size(); ++p) {
        CHECK(Nnz(r.state.layers[p].z) <= spec.retain_k[p]);
        // With u starting at zero and one update per iteration, the dual
        // is the running sum of residuals; after one it equals x - z.
        if (stages == 1) {
          const auto& x = copy.layers()[params[p]].weight;
          for (std::size_t j = 0; j < x.size(); ++j)
            CHECK(r.state.layers[p].u[j] == x[j] - r.state.layers[p].z[j]);
        }
      }
      CHECK(r.state.rho == doctest::Approx(1e-3 * std::pow(10.0, stages - 1)));
    }
  }
  SUBCASE("quantization keeps z in the levels") {
    TrainableNet net = SmallFc(15);
    const QuantSpec spec = MakeQuantSpec(net, 3);
    const auto r = AdmmCompress(net, spec, train, nullptr, QuickSchedule());
    for (std::size_t p = 0; p < spec.levels.size(); ++p)
      CHECK(AllInLevels(r.state.layers[p].z, spec.levels[p]));
  }
  SUBCASE("a support mask restricts z") {
    TrainableNet net = SmallFc(16);
    const PruneSpec half = UniformPruneSpec(net, 0.5);
    auto r0 = AdmmCompress(net, half, train, nullptr, QuickSchedule());
    MaskedRetrain(net, half, r0.state, train, RetrainOptions{1});
    const WeightMasks support = SupportMasks(net);
    const QuantSpec q = MakeQuantSpec(net, 4);
    const auto r = AdmmCompress(net, q, train, nullptr, QuickSchedule(), &support);
    for (std::size_t p = 0; p < support.size(); ++p)
      for (std::size_t j = 0; j < support[p].size(); ++j)
        if (!support[p][j]) CHECK(r.state.layers[p].z[j] == 0.0f);
    MaskedRetrain(net, q, r.state, train, RetrainOptions{1}, &support);
    CHECK(Satisfies(net, q));
    CHECK(Satisfies(net, half));
  }
  SUBCASE("bad specs") {
    TrainableNet net = SmallFc(17);
    CHECK_THROWS_AS(CheckSpec(net, PruneSpec{{1}}), ParameterError);
    CHECK_THROWS_AS(CheckSpec(net, PruneSpec{{0, 3}}), ParameterError);
    CHECK_THROWS_AS(UniformPruneSpec(net, 0.0), ParameterError);
    CHECK_THROWS_AS(AdmmCompress(net, UniformPruneSpec(net, 0.5), train, nullptr,
                                 AdmmSchedule{0.0}),
                    ParameterError);
  }
  SUBCASE("divergence is reported with its iteration") {
    TrainableNet net = SmallFc(18);
    AdmmSchedule s = QuickSchedule();
    s.sgd.lr = 1e6;
    try {
      AdmmCompress(net, UniformPruneSpec(net, 0.5), train, nullptr, s);
      FAIL("expected divergence");
    } catch (const TrainingDivergedError& e) {
      CHECK(e.iteration() >= 0);
    }
  }
}

TEST_CASE("masked_retrain") {
  const Dataset train = Blobs({12}, 3, 120, 19);
  SUBCASE("pruned weights stay exactly zero") {
    TrainableNet net = SmallFc(20);
    const PruneSpec spec = UniformPruneSpec(net, 0.2);
    const auto r = AdmmCompress(net, spec, train, nullptr, QuickSchedule());
    MaskedRetrain(net, spec, r.state, train, RetrainOptions{3});
    CHECK(Satisfies(net, spec));
    const auto params = net.param_layers();
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto& w = net.layers()[params[p]].weight;
      for (std::size_t j = 0; j < w.size(); ++j)
        if (r.state.layers[p].z[j] == 0.0f) CHECK(w[j] == 0.0f);
    }
  }
  SUBCASE("quantized weights are frozen at z") {
    TrainableNet net = SmallFc(21);
    const QuantSpec spec = MakeQuantSpec(net, 2);
    const auto r = AdmmCompress(net, spec, train, nullptr, QuickSchedule());
    MaskedRetrain(net, spec, r.state, train, RetrainOptions{2});
    const auto params = net.param_layers();
    for (std::size_t p = 0; p < params.size(); ++p)
      CHECK(net.layers()[params[p]].weight == r.state.layers[p].z);
    CHECK(Satisfies(net, spec));
  }
  SUBCASE("a fully retained mask is ordinary fine-tuning") {
    TrainableNet a = SmallFc(22), b = SmallFc(22);
    PruneSpec all;
    for (auto i : a.param_layers()) all.retain_k.push_back(a.layers()[i].weight.size());
    AdmmState st;
    for (auto i : a.param_layers())
      st.layers.push_back({a.layers()[i].weight, std::vector<float>(a.layers()[i].weight.size())});
    RetrainOptions ro{2};
    MaskedRetrain(a, all, st, train, ro);
    SgdTrainer t(b, ro.sgd, ro.seed);
    for (int e = 0; e < ro.epochs; ++e) t.RunEpoch(train);
    CHECK(a.BitEquals(b));
  }
}

TEST_CASE("progressive_compress") {
  const Dataset train = Blobs({12}, 3, 120, 23);
  TrainableNet net = SmallFc(24);
  const PruneSpec s4 = UniformPruneSpec(net, 0.25), s10 = UniformPruneSpec(net, 0.1);
  SUBCASE("stages must tighten") {
    CHECK_THROWS_AS(ProgressiveCompress(net, {s10, s4}, train, nullptr, QuickSchedule(), {}),
                    ParameterError);
    CHECK_THROWS_AS(ProgressiveCompress(net, {}, train, nullptr, QuickSchedule(), {}), ParameterError);
  }
  SUBCASE("one stage equals admm then masked retrain") {
    TrainableNet a = net, b = net;
    const AdmmSchedule s = QuickSchedule();
    const RetrainOptions ro{2};
    const auto reports = ProgressiveCompress(a, {s10}, train, &train, s, ro);
    const auto r = AdmmCompress(b, s10, train, &train, s);
    MaskedRetrain(b, s10, r.state, train, ro);
    CHECK(a.BitEquals(b));
    CHECK(reports.size() == 1);
    CHECK(reports[0].accuracy == Evaluate(b, train));
  }
  SUBCASE("every stage ends feasible, and runs are reproducible") {
    TrainableNet a = net, b = net;
    const auto ra = ProgressiveCompress(a, {s4, s10}, train, &train, QuickSchedule(), RetrainOptions{1});
    ProgressiveCompress(b, {s4, s10}, train, &train, QuickSchedule(), RetrainOptions{1});
    CHECK(ra.size() == 2);
    CHECK(Satisfies(a, s10));
    CHECK(a.BitEquals(b));
    CHECK(HistoryCsv(ra[0].history).rfind("iteration,loss,residual,accuracy\n", 0) == 0);
  }
}

TEST_CASE("export") {
  std::mt19937_64 rng(25);
  SUBCASE("dense net gives an all-dense graph that computes the logits") {
    const TrainableNet net = SmallConv(26);
    const Graph g = ExportCompressed(net);
    CHECK(ValidateGraph(g).empty());
    for (const auto& n : g.nodes) CHECK(!n.has_sparse_weights());
    const Dataset d = Blobs({2, 5, 5}, 3, 10, 27);
    for (std::int64_t i = 0; i < d.size(); ++i) {
      const Tensor x({1, 2, 5, 5}, Layout::kNCHW, std::vector<float>(d.sample(i), d.sample(i) + 50));
      CHECK(MaxRelativeError(ToVector(ExecuteGraph(g, x)), net.Forward(d.sample(i), 1)) <= 1e-5);
    }
    CHECK(NetFromGraph(g).BitEquals(net));
  }
  SUBCASE("90% sparse fc is exported as CSR with nnz == retain_k") {
    TrainableNet net({100});
    net.AddFullyConnected(50);
    net.InitializeHe(28);
    const PruneSpec spec = UniformPruneSpec(net, 0.1);
    auto& w = net.layers()[0].weight;
    w = ProjectSparsity(w, spec.retain_k[0]);
    const CompressionSpec cs = spec;
    const Graph g = ExportCompressed(net, ExportOptions{&cs});
    const auto& fc = g.nodes.back();
    REQUIRE(fc.has_sparse_weights());
    CHECK(fc.sparse_weights().nnz() == spec.retain_k[0]);
    CHECK(NetFromGraph(g).BitEquals(net));
  }
  SUBCASE("infeasible net") {
    const TrainableNet net = SmallFc(29);
    const CompressionSpec cs = UniformPruneSpec(net, 0.1);
    CHECK_THROWS_AS(ExportCompressed(net, ExportOptions{&cs}), FeasibilityError);
  }
  SUBCASE("non-chain graphs are rejected") {
    Graph g;
    g.Append(MakeInput(0, {1, 4}), {});
    g.Append(MakeSoftmax(1), {0});
    CHECK_THROWS_AS(NetFromGraph(g), UnsupportedError);
  }
  SUBCASE("graph pruning") {
    Graph g = ExportCompressed(SmallConv(30));
    const Graph p = PruneGraphWeights(g, 0.9);
    for (const auto& n : p.nodes) {
      if (!n.has_weights()) continue;
      const Tensor m = n.WeightMatrix();
      const auto total = static_cast<std::int64_t>(m.size());
      CHECK(Nnz(m.data()) == std::max<std::int64_t>(1, std::llround(0.1 * total)));
    }
    const Graph d = DensifyWeights(p);
    for (const auto& n : d.nodes) CHECK(!n.has_sparse_weights());
    const Tensor x = RandomTensor({1, 2, 5, 5}, Layout::kNCHW, rng);
    CHECK(MaxRelativeError(ToVector(ExecuteGraph(p, x)), ToVector(ExecuteGraph(d, x))) <= 1e-5);
  }
}
