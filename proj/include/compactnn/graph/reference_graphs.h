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

#ifndef COMPACTNN_GRAPH_REFERENCE_GRAPHS_H_
#define COMPACTNN_GRAPH_REFERENCE_GRAPHS_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "compactnn/graph/graph.h"

namespace compactnn {

enum class ReferenceModel { kMobileNetV1, kMobileNetV2Stub, kLeNet5, kLeNet300100 };

// Accepts mobilenet_v1, mobilenet_v2_stub, lenet5, lenet_300_100.
// Throws UnsupportedError for anything else.
ReferenceModel ParseReferenceModel(std::string_view name);
const char* ReferenceModelName(ReferenceModel model);

struct ReferenceOptions {
  // Spatial input extent; 0 selects the model's native resolution
  // (224 for the MobileNets, 28 for the LeNets).
  std::int64_t resolution = 0;
  std::int64_t batch = 1;
  std::uint64_t seed = 1;
};

// Topology with randomly initialized weights (He-scaled conv/fc weights,
// BatchNorm statistics near identity). Always passes ValidateGraph.
Graph BuildReferenceGraph(ReferenceModel model, const ReferenceOptions& options = {});

}  // namespace compactnn

#endif  // COMPACTNN_GRAPH_REFERENCE_GRAPHS_H_
