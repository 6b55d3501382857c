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

#ifndef COMPACTNN_ENGINE_KERNELS_H_
#define COMPACTNN_ENGINE_KERNELS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "compactnn/engine/kernel_config.h"
#include "compactnn/graph/layer.h"
#include "compactnn/tensor/sparse_matrix.h"
#include "compactnn/tensor/tensor.h"

namespace compactnn {

// Every kernel writes its full output and accumulates each output element
// in a fixed order: contributions in ascending reduction index, starting
// from zero. Tile sizes, loop order, unrolling and worker count change the
// schedule, never that order, so results are reproducible per config.
//
// Kernels taking a `LoadCounter*` run an instrumented variant when it is
// non-null; the null path is compiled without any counting code.

// C (m x n) = A (m x k) * B (k x n), all row-major and densely packed.
void GemmTiled(std::span<const float> a, std::span<const float> b, std::span<float> c,
               std::int64_t m, std::int64_t n, std::int64_t k, const KernelConfig& cfg,
               int threads = 1, LoadCounter* counter = nullptr);
Tensor GemmTiled(const Tensor& a, const Tensor& b, const KernelConfig& cfg = {},
                 int threads = 1, LoadCounter* counter = nullptr);

// C (rows x n) = W (rows x cols, CSR) * X (cols x n). Uses the tile
// packing when `w` carries one; each stored weight is read once per
// n-tile in both paths.
void SpmmCsrTiled(const SparseMatrixCSR& w, std::span<const float> x, std::span<float> c,
                  std::int64_t n, const KernelConfig& cfg, int threads = 1,
                  LoadCounter* counter = nullptr);
Tensor SpmmCsrTiled(const SparseMatrixCSR& w, const Tensor& x, const KernelConfig& cfg = {},
                    int threads = 1, LoadCounter* counter = nullptr);

// Element-at-a-time baseline: every output element re-reads the weights of
// its row, so weight loads total nnz * n.
Tensor SpmmCsrElementwise(const SparseMatrixCSR& w, const Tensor& x,
                          LoadCounter* counter = nullptr);

// Copy of `w` carrying a (tile_m x tile_k) packing.
SparseMatrixCSR PackWeightsTiled(const SparseMatrixCSR& w, const KernelConfig& cfg);

// Reference cross-correlation: x (N,C,H,W), w (K,C,kh,kw), zero padding.
Tensor Conv2dDirect(const Tensor& x, const Tensor& w, const std::optional<std::vector<float>>& bias,
                    std::int64_t stride, std::int64_t padding);

// Per-channel convolution: x (N,C,H,W), w (C,1,kh,kw).
Tensor DepthwiseConv2d(const Tensor& x, const Tensor& w,
                       const std::optional<std::vector<float>>& bias, std::int64_t stride,
                       std::int64_t padding, LoadCounter* counter = nullptr);

Tensor Pool2d(const Tensor& x, PoolKind kind, std::int64_t window, std::int64_t stride);
Tensor GlobalPool(const Tensor& x, PoolKind kind);

enum class ElementwiseKind { kAdd, kRelu, kRelu6 };
// kAdd needs `b` with dims equal to `a`; the activations ignore `b`.
Tensor Elementwise(ElementwiseKind kind, const Tensor& a, const Tensor* b = nullptr);

inline float Relu6(float v) { return v < 0.0f ? 0.0f : (v > 6.0f ? 6.0f : v); }
void ApplyActivation(std::span<float> data, Activation act);

// Runs fn(begin, end) over [0, count) split into contiguous chunks, one per
// worker. threads <= 1 runs inline.
template <typename Fn>
void ParallelFor(std::int64_t count, int threads, Fn&& fn);

}  // namespace compactnn

#include "compactnn/engine/parallel_impl.h"

#endif  // COMPACTNN_ENGINE_KERNELS_H_
