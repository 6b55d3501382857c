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
#include <cstring>
#include <mutex>
#include <string>

#include "compactnn/common/error.h"
#include "compactnn/engine/kernels.h"

namespace compactnn {

namespace {

constexpr int kNr = 16;

struct Counts {
  std::uint64_t weight = 0;
  std::uint64_t activation = 0;
};

// Sixteen lanes; GCC lowers this to whatever vector width the target has.
typedef float V16 __attribute__((vector_size(kNr * sizeof(float))));

inline V16 LoadV(const float* p) {
  V16 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

// Accumulates an R x W block of C over kc reduction steps, keeping the
// block in registers. W <= kNr; full-width blocks use one vector per row.
template <int R, int U, bool kCount, bool kFullWidth>
inline void Block(const float* a, std::int64_t lda, const float* b, std::int64_t ldb,
                  float* c, std::int64_t ldc, std::int64_t kc, int width, Counts& counts) {
  if constexpr (kFullWidth) {
    V16 acc[R];
    for (int r = 0; r < R; ++r) acc[r] = LoadV(c + r * ldc);
    std::int64_t p = 0;
    for (; p + U <= kc; p += U) {
      for (int u = 0; u < U; ++u) {
        const V16 bv = LoadV(b + (p + u) * ldb);
        for (int r = 0; r < R; ++r) acc[r] += a[r * lda + p + u] * bv;
      }
    }
    for (; p < kc; ++p) {
      const V16 bv = LoadV(b + p * ldb);
      for (int r = 0; r < R; ++r) acc[r] += a[r * lda + p] * bv;
    }
    for (int r = 0; r < R; ++r) std::memcpy(c + r * ldc, &acc[r], sizeof(V16));
  } else {
    float acc[R][kNr];
    for (int r = 0; r < R; ++r)
      for (int j = 0; j < width; ++j) acc[r][j] = c[r * ldc + j];
    for (std::int64_t p = 0; p < kc; ++p) {
      const float* brow = b + p * ldb;
      for (int r = 0; r < R; ++r) {
        const float av = a[r * lda + p];
        for (int j = 0; j < width; ++j) acc[r][j] += av * brow[j];
      }
    }
    for (int r = 0; r < R; ++r)
      for (int j = 0; j < width; ++j) c[r * ldc + j] = acc[r][j];
  }
  if constexpr (kCount) {
    const int w = kFullWidth ? kNr : width;
    counts.weight += static_cast<std::uint64_t>(R * kc);
    counts.activation += static_cast<std::uint64_t>(w * kc);
  }
}

template <int R, int U, bool kCount>
inline void RowBand(const float* a, std::int64_t lda, const float* b, std::int64_t ldb,
                    float* c, std::int64_t ldc, std::int64_t nc, std::int64_t kc,
                    Counts& counts) {
  std::int64_t j = 0;
  for (; j + kNr <= nc; j += kNr)
    Block<R, U, kCount, true>(a, lda, b + j, ldb, c + j, ldc, kc, kNr, counts);
  if (j < nc)
    Block<R, U, kCount, false>(a, lda, b + j, ldb, c + j, ldc, kc,
                               static_cast<int>(nc - j), counts);
}

// One (mc x nc x kc) tile.
template <int U, bool kCount>
void Tile(const float* a, std::int64_t lda, const float* b, std::int64_t ldb, float* c,
          std::int64_t ldc, std::int64_t mc, std::int64_t nc, std::int64_t kc,
          Counts& counts) {
  std::int64_t i = 0;
  for (; i + 4 <= mc; i += 4)
    RowBand<4, U, kCount>(a + i * lda, lda, b, ldb, c + i * ldc, ldc, nc, kc, counts);
  for (; i < mc; ++i)
    RowBand<1, U, kCount>(a + i * lda, lda, b, ldb, c + i * ldc, ldc, nc, kc, counts);
}

template <int U, bool kCount>
void GemmRange(const float* a, const float* b, float* c, std::int64_t m, std::int64_t n,
               std::int64_t k, const KernelConfig& cfg, std::int64_t mt_begin,
               std::int64_t mt_end, Counts& counts) {
  const std::int64_t tm = cfg.tile_m, tn = cfg.tile_n, tk = cfg.tile_k;
  const std::int64_t n_tiles = (n + tn - 1) / tn;
  const std::int64_t k_tiles = (k + tk - 1) / tk;
  auto run = [&](std::int64_t mt, std::int64_t nt, std::int64_t kt) {
    const std::int64_t i0 = mt * tm, j0 = nt * tn, p0 = kt * tk;
    Tile<U, kCount>(a + i0 * k + p0, k, b + p0 * n + j0, n, c + i0 * n + j0, n,
                    std::min(tm, m - i0), std::min(tn, n - j0), std::min(tk, k - p0),
                    counts);
  };
  switch (cfg.loop_order) {
    case LoopOrder::kMNK:
      for (auto mt = mt_begin; mt < mt_end; ++mt)
        for (std::int64_t nt = 0; nt < n_tiles; ++nt)
          for (std::int64_t kt = 0; kt < k_tiles; ++kt) run(mt, nt, kt);
      break;
    case LoopOrder::kMKN:
      for (auto mt = mt_begin; mt < mt_end; ++mt)
        for (std::int64_t kt = 0; kt < k_tiles; ++kt)
          for (std::int64_t nt = 0; nt < n_tiles; ++nt) run(mt, nt, kt);
      break;
    case LoopOrder::kNMK:
      for (std::int64_t nt = 0; nt < n_tiles; ++nt)
        for (auto mt = mt_begin; mt < mt_end; ++mt)
          for (std::int64_t kt = 0; kt < k_tiles; ++kt) run(mt, nt, kt);
      break;
    case LoopOrder::kNKM:
      for (std::int64_t nt = 0; nt < n_tiles; ++nt)
        for (std::int64_t kt = 0; kt < k_tiles; ++kt)
          for (auto mt = mt_begin; mt < mt_end; ++mt) run(mt, nt, kt);
      break;
    case LoopOrder::kKMN:
      for (std::int64_t kt = 0; kt < k_tiles; ++kt)
        for (auto mt = mt_begin; mt < mt_end; ++mt)
          for (std::int64_t nt = 0; nt < n_tiles; ++nt) run(mt, nt, kt);
      break;
    case LoopOrder::kKNM:
      for (std::int64_t kt = 0; kt < k_tiles; ++kt)
        for (std::int64_t nt = 0; nt < n_tiles; ++nt)
          for (auto mt = mt_begin; mt < mt_end; ++mt) run(mt, nt, kt);
      break;
  }
}

template <bool kCount>
void GemmDispatch(const float* a, const float* b, float* c, std::int64_t m, std::int64_t n,
                  std::int64_t k, const KernelConfig& cfg, std::int64_t mt_begin,
                  std::int64_t mt_end, Counts& counts) {
  // Unroll is clamped to the k tile and rounded down to a supported factor.
  const std::int64_t unroll = std::min(cfg.unroll, cfg.tile_k);
  if (unroll >= 8)
    GemmRange<8, kCount>(a, b, c, m, n, k, cfg, mt_begin, mt_end, counts);
  else if (unroll >= 4)
    GemmRange<4, kCount>(a, b, c, m, n, k, cfg, mt_begin, mt_end, counts);
  else if (unroll >= 2)
    GemmRange<2, kCount>(a, b, c, m, n, k, cfg, mt_begin, mt_end, counts);
  else
    GemmRange<1, kCount>(a, b, c, m, n, k, cfg, mt_begin, mt_end, counts);
}

}  // namespace

void GemmTiled(std::span<const float> a, std::span<const float> b, std::span<float> c,
               std::int64_t m, std::int64_t n, std::int64_t k, const KernelConfig& cfg,
               int threads, LoadCounter* counter) {
  if (!cfg.Valid()) throw ParameterError("invalid kernel config " + cfg.ToString());
  if (static_cast<std::int64_t>(a.size()) != m * k ||
      static_cast<std::int64_t>(b.size()) != k * n ||
      static_cast<std::int64_t>(c.size()) != m * n)
    throw ShapeError("gemm operand sizes do not match m=" + std::to_string(m) +
                     " n=" + std::to_string(n) + " k=" + std::to_string(k));
  std::fill(c.begin(), c.end(), 0.0f);
  if (m == 0 || n == 0 || k == 0) return;
  const std::int64_t m_tiles = (m + cfg.tile_m - 1) / cfg.tile_m;
  if (counter == nullptr) {
    ParallelFor(m_tiles, threads, [&](std::int64_t begin, std::int64_t end) {
      Counts unused;
      GemmDispatch<false>(a.data(), b.data(), c.data(), m, n, k, cfg, begin, end, unused);
    });
    return;
  }
  std::mutex merge;
  ParallelFor(m_tiles, threads, [&](std::int64_t begin, std::int64_t end) {
    Counts local;
    GemmDispatch<true>(a.data(), b.data(), c.data(), m, n, k, cfg, begin, end, local);
    std::lock_guard lock(merge);
    counter->weight_loads += local.weight;
    counter->activation_loads += local.activation;
  });
}

Tensor GemmTiled(const Tensor& a, const Tensor& b, const KernelConfig& cfg, int threads,
                 LoadCounter* counter) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("gemm expects 2-D operands");
  if (a.dim(1) != b.dim(0))
    throw ShapeError("gemm inner dims differ: " + ShapeToString(a.dims()) + " * " +
                     ShapeToString(b.dims()));
  Tensor c({a.dim(0), b.dim(1)}, Layout::kRowMajor2D);
  GemmTiled(a.data(), b.data(), c.data(), a.dim(0), b.dim(1), a.dim(1), cfg, threads,
            counter);
  return c;
}

}  // namespace compactnn
