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
#include <filesystem>
#include <set>

#include "compactnn/autotune/search_space.h"
#include "compactnn/autotune/tune_cache.h"
#include "compactnn/autotune/tuner.h"
#include "compactnn/common/error.h"

using namespace compactnn;

namespace {

ShapeKey Gemm(std::int64_t m, std::int64_t n, std::int64_t k) {
  return ShapeKey{KernelKind::kGemm, m, n, k, 0};
}

std::vector<KernelConfig> PrunedCandidates(const ShapeKey& key,
                                           std::int64_t budget = kDefaultFootprintBudget) {
  const double s =
      key.kind == KernelKind::kSpmm ? BucketRepresentativeSparsity(key.sparsity_bucket) : 0.0;
  return PruneSearchSpace(EnumerateSearchSpace(key), key, s, budget).Expand();
}

}  // namespace

TEST_CASE("enumerate_search_space") {
  SUBCASE("64 cubed has 3000 configs") {
    const auto space = EnumerateSearchSpace(Gemm(64, 64, 64));
    CHECK(space.tile_m == std::vector<std::int64_t>{4, 8, 16, 32, 64});
    CHECK(space.unroll == std::vector<std::int64_t>{1, 2, 4, 8});
    CHECK(space.loop_orders.size() == 6);
    CHECK(space.Expand().size() == 3000);
  }
  SUBCASE("small dims clamp") {
    const auto space = EnumerateSearchSpace(Gemm(4, 3, 100));
    CHECK(space.tile_m == std::vector<std::int64_t>{4});
    CHECK(space.tile_n == std::vector<std::int64_t>{3});
  }
  SUBCASE("every config is valid and ordered by footprint") {
    for (const auto& key : {Gemm(64, 64, 64), Gemm(7, 200, 33), Gemm(1, 1, 1)}) {
      const auto all = EnumerateSearchSpace(key).Expand();
      CHECK(!all.empty());
      CHECK(std::all_of(all.begin(), all.end(), [](const KernelConfig& c) { return c.Valid(); }));
      CHECK(std::is_sorted(all.begin(), all.end(), [](const KernelConfig& a, const KernelConfig& b) {
        return a.Footprint() < b.Footprint();
      }));
      CHECK(std::set<KernelConfig>(all.begin(), all.end()).size() == all.size());
    }
  }
}

TEST_CASE("prune_search_space") {
  SUBCASE("budget removes 256 cubed") {
    const ShapeKey key = Gemm(256, 256, 256);
    const KernelConfig big{256, 256, 256, 1, LoopOrder::kMNK, 8};
    CHECK(big.Footprint() == 196608);
    const auto full = EnumerateSearchSpace(key).Expand();
    CHECK(std::find(full.begin(), full.end(), big) != full.end());
    const auto pruned = PrunedCandidates(key, 32768);
    CHECK(std::find(pruned.begin(), pruned.end(), big) == pruned.end());
    CHECK(std::all_of(pruned.begin(), pruned.end(),
                      [](const KernelConfig& c) { return c.Footprint() <= 32768 && c.unroll <= c.tile_k; }));
  }
  SUBCASE("dense layers keep every loop order") {
    const auto space = PruneSearchSpace(EnumerateSearchSpace(Gemm(64, 64, 64)), Gemm(64, 64, 64), 0.0);
    CHECK(space.loop_orders.size() == 6);
  }
  SUBCASE("high sparsity keeps m-outermost orders only") {
    const ShapeKey key{KernelKind::kSpmm, 64, 64, 64, 3};
    const auto space = PruneSearchSpace(EnumerateSearchSpace(key), key, 0.9);
    CHECK(!space.loop_orders.empty());
    CHECK(space.loop_orders.size() < 6);
    CHECK(std::all_of(space.loop_orders.begin(), space.loop_orders.end(), IsMOutermost));
    const auto mid = PruneSearchSpace(EnumerateSearchSpace(key), key, 0.6);
    CHECK(mid.loop_orders.size() == 6);
  }
  SUBCASE("never empty") {
    for (const auto& key : {Gemm(1, 1, 1), Gemm(3, 2, 1), Gemm(512, 512, 512)}) {
      CHECK(!PrunedCandidates(key, 1).empty());
      CHECK(!PrunedCandidates(key).empty());
    }
  }
  SUBCASE("vector-width n tiles") {
    const auto c = PrunedCandidates(Gemm(128, 128, 128));
    CHECK(std::all_of(c.begin(), c.end(), [](const KernelConfig& x) { return x.tile_n >= kVectorTileN; }));
    const auto narrow = PrunedCandidates(Gemm(64, 8, 64));
    CHECK(std::all_of(narrow.begin(), narrow.end(), [](const KernelConfig& x) { return x.tile_n == 8; }));
  }
  SUBCASE("deterministic ordering") {
    CHECK(PrunedCandidates(Gemm(96, 40, 200)) == PrunedCandidates(Gemm(96, 40, 200)));
  }
}

TEST_CASE("median") {
  CHECK(Median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(Median({5.0}) == 5.0);
  CHECK(Median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("kernel bench") {
  KernelBench bench(Gemm(48, 48, 48));
  const auto m = bench.Measure(KernelConfig{}, 3);
  CHECK(m.samples.size() == 3);
  auto s = m.samples;
  std::sort(s.begin(), s.end());
  CHECK(m.median_micros == s[1]);
  CHECK_THROWS_AS(bench.Measure(KernelConfig{}, 2), ParameterError);

  KernelBench sparse(ShapeKey{KernelKind::kSpmm, 64, 32, 64, 3});
  CHECK(sparse.Measure(KernelConfig{8, 16, 8, 2, LoopOrder::kMKN, 8}, 3).median_micros > 0.0);
}

TEST_CASE("measurement stability") {
  // Large enough that one run is well above timer resolution.
  const ShapeKey key = Gemm(128, 128, 128);
  const KernelConfig cfg{32, 32, 32, 4, LoopOrder::kMNK, 8};
  const double a = MeasureConfig(key, cfg, 9), b = MeasureConfig(key, cfg, 9);
  CHECK(std::max(a, b) <= 1.25 * std::min(a, b));
}

TEST_CASE("tuner") {
  SUBCASE("budget 1 returns the first candidate") {
    TuneCache cache;
    Tuner tuner(cache, TunerOptions{3});
    const ShapeKey key = Gemm(40, 40, 40);
    CHECK(tuner.TuneLayer(key, 1) == PrunedCandidates(key).front());
    CHECK(tuner.measurements() == 1);
  }
  SUBCASE("a cache hit measures nothing") {
    TuneCache cache;
    Tuner tuner(cache, TunerOptions{3});
    const ShapeKey key{KernelKind::kSpmm, 32, 32, 32, 3};
    const KernelConfig first = tuner.TuneLayer(key, 4);
    const auto before = tuner.measurements();
    CHECK(before == 4);
    CHECK(tuner.TuneLayer(key, 4) == first);
    CHECK(tuner.measurements() == before);
    REQUIRE(cache.Find(key) != nullptr);
    CHECK(cache.Find(key)->config == first);
    CHECK(*cache.Lookup(key) == first);
  }
}

TEST_CASE("tune cache") {
  const ShapeKey key = Gemm(8, 8, 8);
  const KernelConfig a{4, 8, 8, 1, LoopOrder::kMNK, 8}, b{8, 8, 8, 2, LoopOrder::kKNM, 8};
  SUBCASE("recorded times never go up") {
    TuneCache cache;
    CHECK(!cache.Lookup(key).has_value());
    CHECK(cache.Record(key, a, 10.0));
    CHECK(!cache.Record(key, b, 12.0));
    CHECK(cache.Find(key)->config == a);
    CHECK(cache.Find(key)->micros == 10.0);
    CHECK(cache.Record(key, b, 9.0));
    CHECK(cache.Find(key)->config == b);
    CHECK(cache.Find(key)->trials == 3);
  }
  SUBCASE("json round-trip") {
    TuneCache cache;
    cache.Record(key, a, 10.5, 4);
    cache.Record(ShapeKey{KernelKind::kSpmm, 512, 512, 512, 3}, b, 1234.25, 16);
    const TuneCache back = TuneCache::FromJson(cache.ToJson());
    CHECK(back.size() == 2);
    CHECK(back.ToJson() == cache.ToJson());
    const auto path = std::filesystem::temp_directory_path() / "compactnn_test_cache.json";
    cache.Save(path);
    CHECK(TuneCache::Load(path).ToJson() == cache.ToJson());
    std::filesystem::remove(path);
    CHECK(TuneCache::Load(path).size() == 0);
  }
  SUBCASE("malformed json") {
    CHECK_THROWS_AS(TuneCache::FromJson("{not json"), FormatError);
    CHECK_THROWS_AS(TuneCache::FromJson("{\"a\": 1}"), FormatError);
    CHECK_THROWS_AS(TuneCache::FromJson("[{\"key\": 3}]"), FormatError);
  }
}
