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

#ifndef COMPACTNN_ENGINE_KERNEL_CONFIG_H_
#define COMPACTNN_ENGINE_KERNEL_CONFIG_H_

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace compactnn {

// Nesting of the three tile loops, outermost first.
enum class LoopOrder : std::uint8_t { kMNK = 0, kMKN, kNMK, kNKM, kKMN, kKNM };

inline constexpr std::array<LoopOrder, 6> kAllLoopOrders = {
    LoopOrder::kMNK, LoopOrder::kMKN, LoopOrder::kNMK,
    LoopOrder::kNKM, LoopOrder::kKMN, LoopOrder::kKNM};

const char* LoopOrderName(LoopOrder order);  // "mnk", "mkn", ...
std::optional<LoopOrder> ParseLoopOrder(std::string_view name);
bool IsMOutermost(LoopOrder order);

struct KernelConfig {
  std::int64_t tile_m = 32;
  std::int64_t tile_n = 32;
  std::int64_t tile_k = 32;
  std::int64_t unroll = 4;
  LoopOrder loop_order = LoopOrder::kMNK;
  // Advisory only; the kernels rely on the compiler for vectorization.
  std::int64_t vector_width_hint = 8;

  bool Valid() const {
    return tile_m >= 1 && tile_n >= 1 && tile_k >= 1 && unroll >= 1;
  }
  // Elements touched by one (m, n, k) tile triple.
  std::int64_t Footprint() const {
    return tile_m * tile_k + tile_k * tile_n + tile_m * tile_n;
  }
  std::string ToString() const;

  auto operator<=>(const KernelConfig&) const = default;
};

inline KernelConfig DefaultKernelConfig() { return KernelConfig{}; }

// Exact event tallies from the instrumented kernel variants.
struct LoadCounter {
  std::uint64_t weight_loads = 0;
  std::uint64_t activation_loads = 0;
};

enum class KernelKind : std::uint8_t { kGemm = 0, kSpmm = 1 };
const char* KernelKindName(KernelKind kind);
std::optional<KernelKind> ParseKernelKind(std::string_view name);

// 0: dense, 1: (0, 0.5], 2: (0.5, 0.8], 3: (0.8, 1].
int SparsityBucket(double sparsity);
// A sparsity inside the bucket, used to synthesize operands when measuring.
double BucketRepresentativeSparsity(int bucket);

// Identifies a kernel invocation shape: C(M x N) = W(M x K) * X(K x N).
struct ShapeKey {
  KernelKind kind = KernelKind::kGemm;
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::int64_t k = 0;
  int sparsity_bucket = 0;

  std::string ToString() const;
  auto operator<=>(const ShapeKey&) const = default;
};

// Lookup of per-shape tuned configs used by the executor.
class ConfigSource {
 public:
  virtual ~ConfigSource() = default;
  virtual std::optional<KernelConfig> Lookup(const ShapeKey& key) const = 0;
};

}  // namespace compactnn

#endif  // COMPACTNN_ENGINE_KERNEL_CONFIG_H_
