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

#include "compactnn/autotune/search_space.h"

#include <algorithm>
#include <tuple>

namespace compactnn {

namespace {

std::vector<std::int64_t> TileCandidates(std::int64_t dim) {
  if (dim < 4) return {std::max<std::int64_t>(dim, 1)};
  std::vector<std::int64_t> out;
  for (std::int64_t t = 4; t <= dim; t *= 2) out.push_back(t);
  return out;
}

std::vector<std::int64_t> WithinDim(const std::vector<std::int64_t>& tiles, std::int64_t dim) {
  std::vector<std::int64_t> out;
  for (auto t : tiles)
    if (t <= std::max<std::int64_t>(dim, 1)) out.push_back(t);
  return out;
}

}  // namespace

std::vector<KernelConfig> SearchSpace::Expand() const {
  std::vector<KernelConfig> out;
  for (auto tm : tile_m)
    for (auto tn : tile_n)
      for (auto tk : tile_k)
        for (auto u : unroll)
          for (auto order : loop_orders) {
            KernelConfig cfg;
            cfg.tile_m = tm;
            cfg.tile_n = tn;
            cfg.tile_k = tk;
            cfg.unroll = u;
            cfg.loop_order = order;
            if (!cfg.Valid()) continue;
            if (unroll_within_tile_k && u > tk) continue;
            if (footprint_budget > 0 && cfg.Footprint() > footprint_budget) continue;
            if (cfg.Footprint() < footprint_floor) continue;
            out.push_back(cfg);
          }
  std::stable_sort(out.begin(), out.end(), [](const KernelConfig& a, const KernelConfig& b) {
    return std::make_tuple(a.Footprint(), a.tile_m, a.tile_n, a.tile_k, a.unroll,
                           a.loop_order) < std::make_tuple(b.Footprint(), b.tile_m, b.tile_n,
                                                           b.tile_k, b.unroll, b.loop_order);
  });
  return out;
}

SearchSpace EnumerateSearchSpace(const ShapeKey& key) {
  SearchSpace s;
  s.tile_m = TileCandidates(key.m);
  s.tile_n = TileCandidates(key.n);
  s.tile_k = TileCandidates(key.k);
  s.unroll = {1, 2, 4, 8};
  s.loop_orders.assign(kAllLoopOrders.begin(), kAllLoopOrders.end());
  return s;
}

SearchSpace PruneSearchSpace(const SearchSpace& space, const ShapeKey& key, double sparsity,
                             std::int64_t budget) {
  SearchSpace p = space;
  p.tile_m = WithinDim(space.tile_m, key.m);
  p.tile_n = WithinDim(space.tile_n, key.n);
  p.tile_k = WithinDim(space.tile_k, key.k);
  p.unroll_within_tile_k = true;
  p.footprint_budget = budget;
  if (sparsity >= 0.8) {
    p.loop_orders.clear();
    for (auto order : space.loop_orders)
      if (IsMOutermost(order)) p.loop_orders.push_back(order);
  }
  if (!p.tile_n.empty()) {
    const std::int64_t widest = *std::max_element(p.tile_n.begin(), p.tile_n.end());
    const std::int64_t min_n = std::min(kVectorTileN, widest);
    std::erase_if(p.tile_n, [&](std::int64_t t) { return t < min_n; });
  }
  const auto admitted = p.Expand();
  if (!admitted.empty()) {
    std::int64_t largest = 0;
    for (const auto& c : admitted) largest = std::max(largest, c.Footprint());
    const std::int64_t ceiling = budget > 0 ? budget : kDefaultFootprintBudget;
    p.footprint_floor = std::min(ceiling / 16, largest / 4);
    return p;
  }

  const KernelConfig d = DefaultKernelConfig();
  SearchSpace fallback;
  fallback.tile_m = {d.tile_m};
  fallback.tile_n = {d.tile_n};
  fallback.tile_k = {d.tile_k};
  fallback.unroll = {d.unroll};
  fallback.loop_orders = {d.loop_order};
  return fallback;
}

}  // namespace compactnn
