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

#include <algorithm>

#include "compactnn/common/error.h"
#include "compactnn/engine/kernels.h"

namespace compactnn {

void ApplyActivation(std::span<float> data, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      for (auto& v : data) v = v < 0.0f ? 0.0f : v;
      return;
    case Activation::kRelu6:
      for (auto& v : data) v = Relu6(v);
      return;
  }
}

Tensor Elementwise(ElementwiseKind kind, const Tensor& a, const Tensor* b) {
  Tensor out = a;
  switch (kind) {
    case ElementwiseKind::kAdd: {
      if (b == nullptr || b->dims() != a.dims())
        throw ShapeError("add operands must have equal dims");
      auto o = out.data();
      const auto bs = b->data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += bs[i];
      break;
    }
    case ElementwiseKind::kRelu:
      ApplyActivation(out.data(), Activation::kRelu);
      break;
    case ElementwiseKind::kRelu6:
      ApplyActivation(out.data(), Activation::kRelu6);
      break;
  }
  return out;
}

}  // namespace compactnn
