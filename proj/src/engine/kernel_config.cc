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

#include "compactnn/engine/kernel_config.h"

#include <sstream>

namespace compactnn {

const char* LoopOrderName(LoopOrder order) {
  switch (order) {
    case LoopOrder::kMNK: return "mnk";
    case LoopOrder::kMKN: return "mkn";
    case LoopOrder::kNMK: return "nmk";
    case LoopOrder::kNKM: return "nkm";
    case LoopOrder::kKMN: return "kmn";
    case LoopOrder::kKNM: return "knm";
  }
  return "?";
}

std::optional<LoopOrder> ParseLoopOrder(std::string_view name) {
  for (auto o : kAllLoopOrders)
    if (name == LoopOrderName(o)) return o;
  return std::nullopt;
}

bool IsMOutermost(LoopOrder order) {
  return order == LoopOrder::kMNK || order == LoopOrder::kMKN;
}

std::string KernelConfig::ToString() const {
  std::ostringstream os;
  os << "tile=" << tile_m << 'x' << tile_n << 'x' << tile_k << " unroll=" << unroll
     << " order=" << LoopOrderName(loop_order);
  return os.str();
}

const char* KernelKindName(KernelKind kind) {
  return kind == KernelKind::kGemm ? "gemm" : "spmm";
}

std::optional<KernelKind> ParseKernelKind(std::string_view name) {
  if (name == "gemm") return KernelKind::kGemm;
  if (name == "spmm") return KernelKind::kSpmm;
  return std::nullopt;
}

int SparsityBucket(double sparsity) {
  if (sparsity <= 0.0) return 0;
  if (sparsity <= 0.5) return 1;
  if (sparsity <= 0.8) return 2;
  return 3;
}

double BucketRepresentativeSparsity(int bucket) {
  switch (bucket) {
    case 0: return 0.0;
    case 1: return 0.25;
    case 2: return 0.65;
    default: return 0.9;
  }
}

std::string ShapeKey::ToString() const {
  std::ostringstream os;
  os << KernelKindName(kind) << ' ' << m << 'x' << n << 'x' << k << " bucket="
     << sparsity_bucket;
  return os.str();
}

}  // namespace compactnn
