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

#ifndef COMPACTNN_AUTOTUNE_SEARCH_SPACE_H_
#define COMPACTNN_AUTOTUNE_SEARCH_SPACE_H_

#include <cstdint>
#include <vector>

#include "compactnn/engine/kernel_config.h"

namespace compactnn {

// Elements a tile triple may touch before the config is considered to
// spill the cache (128 KiB of floats).
inline constexpr std::int64_t kDefaultFootprintBudget = 32768;

// Column width of the kernels' register block. Narrower n tiles drop to the
// scalar edge path for every block.
inline constexpr std::int64_t kVectorTileN = 16;

// Cartesian product of the candidate lists, optionally filtered by a
// footprint budget and an unroll <= tile_k rule.
struct SearchSpace {
  std::vector<std::int64_t> tile_m;
  std::vector<std::int64_t> tile_n;
  std::vector<std::int64_t> tile_k;
  std::vector<std::int64_t> unroll;
  std::vector<LoopOrder> loop_orders;
  std::int64_t footprint_budget = 0;  // 0: unlimited
  std::int64_t footprint_floor = 0;   // configs below this are dropped
  bool unroll_within_tile_k = false;

  // Every admitted config, by ascending footprint, then lexicographically
  // on (tile_m, tile_n, tile_k, unroll, loop_order).
  std::vector<KernelConfig> Expand() const;
};

// Powers of two in [4, dim] per tile axis (just {dim} when dim < 4),
// unroll in {1, 2, 4, 8}, all six loop orders, no filters.
SearchSpace EnumerateSearchSpace(const ShapeKey& key);

// Drops tiles larger than their dim, unroll above tile_k, and configs over
// `budget`; at sparsity >= 0.8 keeps only the m-outermost loop orders.
// Two architecture rules follow: n tiles narrower than the register block
// (kVectorTileN, or the widest candidate when n is smaller) go, and so do
// configs whose footprint is under min(budget / 16, a quarter of the
// largest surviving footprint), whose per-tile overhead swamps the work.
// If nothing survives, returns a space holding only the default config.
SearchSpace PruneSearchSpace(const SearchSpace& space, const ShapeKey& key, double sparsity,
                             std::int64_t budget = kDefaultFootprintBudget);

}  // namespace compactnn

#endif  // COMPACTNN_AUTOTUNE_SEARCH_SPACE_H_
