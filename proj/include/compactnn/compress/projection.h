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

#ifndef COMPACTNN_COMPRESS_PROJECTION_H_
#define COMPACTNN_COMPRESS_PROJECTION_H_

#include <cstdint>
#include <span>
#include <vector>

namespace compactnn {

// Keeps the k largest-magnitude entries (ties to the lower index) and
// zeros the rest: the nearest point with at most k nonzeros. Throws
// ParameterError unless 0 < k <= size.
std::vector<float> ProjectSparsity(std::span<const float> w, std::int64_t k);

// Maps each entry to its nearest level; an exact midpoint goes to the
// level of smaller magnitude. `levels` must be non-empty, sorted and
// distinct (ParameterError otherwise).
std::vector<float> ProjectQuantization(std::span<const float> w, std::span<const float> levels);

// Symmetric uniform levels {i * scale : |i| <= 2^(bits-1) - 1} with
// scale = max_abs / (2^(bits-1) - 1); always contains 0. bits must be in
// [2, 16]. max_abs == 0 yields {0}.
std::vector<float> SymmetricLevels(float max_abs, int bits);

// True when every entry of `w` is one of `levels` (exact comparison).
bool AllInLevels(std::span<const float> w, std::span<const float> levels);

}  // namespace compactnn

#endif  // COMPACTNN_COMPRESS_PROJECTION_H_
