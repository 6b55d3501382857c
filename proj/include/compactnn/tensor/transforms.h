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

#ifndef COMPACTNN_TENSOR_TRANSFORMS_H_
#define COMPACTNN_TENSOR_TRANSFORMS_H_

#include <cstdint>

#include "compactnn/tensor/tensor.h"

namespace compactnn {

// Rounds dims[axis] up to a multiple of `unit`, zero-filling the new cells.
// Logical dims are carried over unchanged.
Tensor PadToAlignment(const Tensor& t, std::int64_t unit, std::size_t axis);

// NCHW <-> NHWC. Element (n,c,h,w) is preserved; same-layout requests return
// an identical copy.
Tensor TransformLayout(const Tensor& t, Layout target);

// Output extent of a convolution/pooling window along one axis.
std::int64_t ConvOutputExtent(std::int64_t in, std::int64_t kernel,
                              std::int64_t stride, std::int64_t padding);

// Unfolds image `n` of an NCHW tensor into a (C*kh*kw) x (Ho*Wo) matrix.
// Row index is (c*kh + i)*kw + j, column index is oh*Wo + ow.
Tensor Im2Col(const Tensor& input, std::int64_t kh, std::int64_t kw,
              std::int64_t stride, std::int64_t padding, std::int64_t n = 0);

// Same unfolding written into caller-owned storage of the right size.
void Im2ColInto(const float* image, std::int64_t channels, std::int64_t height,
                std::int64_t width, std::int64_t kh, std::int64_t kw,
                std::int64_t stride, std::int64_t padding, float* out);

}  // namespace compactnn

#endif  // COMPACTNN_TENSOR_TRANSFORMS_H_
