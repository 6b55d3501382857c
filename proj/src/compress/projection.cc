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

#include "compactnn/compress/projection.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "compactnn/common/error.h"

namespace compactnn {

std::vector<float> ProjectSparsity(std::span<const float> w, std::int64_t k) {
  const auto n = static_cast<std::int64_t>(w.size());
  if (k <= 0 || k > n)
    throw ParameterError("retain count " + std::to_string(k) + " outside [1, " +
                         std::to_string(n) + "]");
  if (k == n) return {w.begin(), w.end()};
  std::vector<std::uint32_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), 0u);
  // Strict total order: larger magnitude first, then lower index.
  auto before = [&](std::uint32_t a, std::uint32_t b) {
    const float ma = std::abs(w[a]), mb = std::abs(w[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), before);
  std::vector<float> out(w.size(), 0.0f);
  for (std::int64_t i = 0; i < k; ++i) out[idx[i]] = w[idx[i]];
  return out;
}

std::vector<float> ProjectQuantization(std::span<const float> w, std::span<const float> levels) {
  if (levels.empty()) throw ParameterError("quantization needs at least one level");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i - 1] < levels[i]))
      throw ParameterError("quantization levels must be sorted and distinct");
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const float v = w[i];
    const auto hi_it = std::lower_bound(levels.begin(), levels.end(), v);
    if (hi_it == levels.begin()) {
      out[i] = levels.front();
      continue;
    }
    if (hi_it == levels.end()) {
      out[i] = levels.back();
      continue;
    }
    const float hi = *hi_it, lo = *(hi_it - 1);
    // In double the two distances of a float midpoint compare as an exact tie.
    const double d_lo = static_cast<double>(v) - lo;
    const double d_hi = static_cast<double>(hi) - v;
    if (d_lo < d_hi)
      out[i] = lo;
    else if (d_hi < d_lo)
      out[i] = hi;
    else
      out[i] = std::abs(lo) <= std::abs(hi) ? lo : hi;
  }
  return out;
}

std::vector<float> SymmetricLevels(float max_abs, int bits) {
  if (bits < 2 || bits > 16) throw ParameterError("quantization bits must be in [2, 16]");
  if (!(max_abs >= 0.0f) || !std::isfinite(max_abs))
    throw ParameterError("level range must be finite and non-negative");
  if (max_abs == 0.0f) return {0.0f};
  const int q = (1 << (bits - 1)) - 1;
  const double scale = static_cast<double>(max_abs) / q;
  std::vector<float> levels;
  for (int i = -q; i <= q; ++i) levels.push_back(static_cast<float>(i * scale));
  return levels;
}

bool AllInLevels(std::span<const float> w, std::span<const float> levels) {
  return std::all_of(w.begin(), w.end(), [&](float v) {
    return std::binary_search(levels.begin(), levels.end(), v);
  });
}

}  // namespace compactnn
