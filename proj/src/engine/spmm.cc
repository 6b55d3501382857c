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
#include <mutex>
#include <string>

#include "compactnn/common/error.h"
#include "compactnn/engine/kernels.h"

namespace compactnn {

namespace {

struct Counts {
  std::uint64_t weight = 0;
  std::uint64_t activation = 0;
};

// c[0:len) += v * x[0:len). Shared by the packed and unpacked paths so
// both perform the identical floating-point operations.
inline void Axpy(float v, const float* __restrict x, float* __restrict c, std::int64_t len) {
  for (std::int64_t j = 0; j < len; ++j) c[j] += v * x[j];
}

// Applies entries [begin, end) of parallel (value, row, col) arrays to
// columns [j0, j0+len) of C. Each value is loaded once.
template <int U, bool kCount>
inline void ApplyEntries(const float* values, const std::uint32_t* rows,
                         const std::uint32_t* cols, std::uint32_t begin, std::uint32_t end,
                         const float* x, float* c, std::int64_t ldn, std::int64_t j0,
                         std::int64_t len, Counts& counts) {
  std::uint32_t p = begin;
  for (; p + U <= end; p += U) {
    for (int u = 0; u < U; ++u) {
      const float v = values[p + u];
      Axpy(v, x + cols[p + u] * ldn + j0, c + rows[p + u] * ldn + j0, len);
    }
  }
  for (; p < end; ++p) Axpy(values[p], x + cols[p] * ldn + j0, c + rows[p] * ldn + j0, len);
  if constexpr (kCount) {
    counts.weight += end - begin;
    counts.activation += static_cast<std::uint64_t>(end - begin) * static_cast<std::uint64_t>(len);
  }
}

// Same for one CSR row (row index implicit).
template <int U, bool kCount>
inline void ApplyRow(const float* values, const std::uint32_t* cols, std::uint32_t begin,
                     std::uint32_t end, const float* x, float* crow, std::int64_t ldn,
                     std::int64_t j0, std::int64_t len, Counts& counts) {
  std::uint32_t p = begin;
  for (; p + U <= end; p += U) {
    for (int u = 0; u < U; ++u) Axpy(values[p + u], x + cols[p + u] * ldn + j0, crow + j0, len);
  }
  for (; p < end; ++p) Axpy(values[p], x + cols[p] * ldn + j0, crow + j0, len);
  if constexpr (kCount) {
    counts.weight += end - begin;
    counts.activation += static_cast<std::uint64_t>(end - begin) * static_cast<std::uint64_t>(len);
  }
}

template <int U, bool kCount>
void UnpackedRange(const SparseMatrixCSR& w, const float* x, float* c, std::int64_t n,
                   const KernelConfig& cfg, std::int64_t mt_begin, std::int64_t mt_end,
                   Counts& counts) {
  // Without a packing the reduction axis is not blocked; the loop order
  // only decides whether row tiles or column tiles are outermost.
  const std::int64_t tm = cfg.tile_m, tn = cfg.tile_n;
  const std::int64_t n_tiles = (n + tn - 1) / tn;
  const auto* rp = w.row_ptr().data();
  const auto* vals = w.values().data();
  const auto* cols = w.col_idx().data();
  auto run = [&](std::int64_t mt, std::int64_t nt) {
    const std::int64_t j0 = nt * tn, len = std::min(tn, n - j0);
    const std::int64_t r1 = std::min(w.rows(), (mt + 1) * tm);
    for (std::int64_t r = mt * tm; r < r1; ++r)
      ApplyRow<U, kCount>(vals, cols, rp[r], rp[r + 1], x, c + r * n, n, j0, len, counts);
  };
  if (IsMOutermost(cfg.loop_order) || cfg.loop_order == LoopOrder::kKMN) {
    for (auto mt = mt_begin; mt < mt_end; ++mt)
      for (std::int64_t nt = 0; nt < n_tiles; ++nt) run(mt, nt);
  } else {
    for (std::int64_t nt = 0; nt < n_tiles; ++nt)
      for (auto mt = mt_begin; mt < mt_end; ++mt) run(mt, nt);
  }
}

template <int U, bool kCount>
void PackedRange(const SparseMatrixCSR& w, const float* x, float* c, std::int64_t n,
                 const KernelConfig& cfg, std::int64_t mt_begin, std::int64_t mt_end,
                 Counts& counts) {
  const TilePacking& pk = *w.packing();
  const std::int64_t tn = cfg.tile_n;
  const std::int64_t n_tiles = (n + tn - 1) / tn;
  const std::int64_t k_tiles = pk.num_col_tiles();
  const auto* gp = pk.group_ptr.data();
  auto run = [&](std::int64_t mt, std::int64_t nt, std::int64_t kt) {
    const std::int64_t j0 = nt * tn, len = std::min(tn, n - j0);
    const auto g = static_cast<std::size_t>(mt * k_tiles + kt);
    ApplyEntries<U, kCount>(pk.packed_values.data(), pk.packed_rows.data(),
                            pk.packed_cols.data(), gp[g], gp[g + 1], x, c, n, j0, len, counts);
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
void SpmmDispatch(const SparseMatrixCSR& w, const float* x, float* c, std::int64_t n,
                  const KernelConfig& cfg, std::int64_t mt_begin, std::int64_t mt_end,
                  Counts& counts) {
  const bool packed = w.packing().has_value();
  const std::int64_t unroll = cfg.unroll;
  auto go = [&]<int U>() {
    if (packed)
      PackedRange<U, kCount>(w, x, c, n, cfg, mt_begin, mt_end, counts);
    else
      UnpackedRange<U, kCount>(w, x, c, n, cfg, mt_begin, mt_end, counts);
  };
  if (unroll >= 8)
    go.template operator()<8>();
  else if (unroll >= 4)
    go.template operator()<4>();
  else if (unroll >= 2)
    go.template operator()<2>();
  else
    go.template operator()<1>();
}

}  // namespace

void SpmmCsrTiled(const SparseMatrixCSR& w, std::span<const float> x, std::span<float> c,
                  std::int64_t n, const KernelConfig& cfg, int threads, LoadCounter* counter) {
  if (!cfg.Valid()) throw ParameterError("invalid kernel config " + cfg.ToString());
  if (static_cast<std::int64_t>(x.size()) != w.cols() * n ||
      static_cast<std::int64_t>(c.size()) != w.rows() * n)
    throw ShapeError("spmm operand sizes do not match W " + std::to_string(w.rows()) + "x" +
                     std::to_string(w.cols()) + " and n=" + std::to_string(n));
  std::fill(c.begin(), c.end(), 0.0f);
  if (w.rows() == 0 || n == 0) return;

  // Row tiles come from the packing when present so groups line up.
  KernelConfig run_cfg = cfg;
  if (w.packing()) run_cfg.tile_m = w.packing()->tile_rows;
  const std::int64_t m_tiles = (w.rows() + run_cfg.tile_m - 1) / run_cfg.tile_m;
  if (counter == nullptr) {
    ParallelFor(m_tiles, threads, [&](std::int64_t begin, std::int64_t end) {
      Counts unused;
      SpmmDispatch<false>(w, x.data(), c.data(), n, run_cfg, begin, end, unused);
    });
    return;
  }
  std::mutex merge;
  ParallelFor(m_tiles, threads, [&](std::int64_t begin, std::int64_t end) {
    Counts local;
    SpmmDispatch<true>(w, x.data(), c.data(), n, run_cfg, begin, end, local);
    std::lock_guard lock(merge);
    counter->weight_loads += local.weight;
    counter->activation_loads += local.activation;
  });
}

Tensor SpmmCsrTiled(const SparseMatrixCSR& w, const Tensor& x, const KernelConfig& cfg,
                    int threads, LoadCounter* counter) {
  if (x.rank() != 2) throw ShapeError("spmm expects a 2-D dense operand");
  if (x.dim(0) != w.cols())
    throw ShapeError("spmm inner dims differ: W has " + std::to_string(w.cols()) +
                     " cols, X has " + std::to_string(x.dim(0)) + " rows");
  Tensor c({w.rows(), x.dim(1)}, Layout::kRowMajor2D);
  SpmmCsrTiled(w, x.data(), c.data(), x.dim(1), cfg, threads, counter);
  return c;
}

Tensor SpmmCsrElementwise(const SparseMatrixCSR& w, const Tensor& x, LoadCounter* counter) {
  if (x.rank() != 2 || x.dim(0) != w.cols())
    throw ShapeError("spmm inner dims differ");
  const std::int64_t n = x.dim(1);
  Tensor c({w.rows(), n}, Layout::kRowMajor2D);
  const auto xs = x.data();
  std::uint64_t weight_loads = 0;
  for (std::int64_t r = 0; r < w.rows(); ++r) {
    const auto begin = w.row_ptr()[r], end = w.row_ptr()[r + 1];
    for (std::int64_t j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (auto p = begin; p < end; ++p)
        acc += w.values()[p] * xs[w.col_idx()[p] * n + j];
      c.at(r, j) = acc;
      weight_loads += end - begin;
    }
  }
  if (counter) {
    counter->weight_loads += weight_loads;
    counter->activation_loads += weight_loads;
  }
  return c;
}

SparseMatrixCSR PackWeightsTiled(const SparseMatrixCSR& w, const KernelConfig& cfg) {
  if (!cfg.Valid()) throw ParameterError("invalid kernel config " + cfg.ToString());
  SparseMatrixCSR packed = w;
  packed.set_packing(BuildTilePacking(w, cfg.tile_m, cfg.tile_k));
  return packed;
}

}  // namespace compactnn
