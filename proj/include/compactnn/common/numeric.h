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

#ifndef COMPACTNN_COMMON_NUMERIC_H_
#define COMPACTNN_COMMON_NUMERIC_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace compactnn {

// max_i |a_i - b_i| / max_i |b_i|, with `b` the reference. Mismatched
// lengths or a non-finite entry give infinity; two all-zero arrays give 0.
inline double MaxRelativeError(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    if (!std::isfinite(x) || !std::isfinite(y)) return std::numeric_limits<double>::infinity();
    diff = std::max(diff, std::abs(x - y));
    scale = std::max(scale, std::abs(y));
  }
  if (diff == 0.0) return 0.0;
  return scale == 0.0 ? std::numeric_limits<double>::infinity() : diff / scale;
}

}  // namespace compactnn

#endif  // COMPACTNN_COMMON_NUMERIC_H_
