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

#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <random>

#include "compactnn/common/error.h"
#include "compactnn/tensor/sparse_matrix.h"
#include "compactnn/tensor/tensor.h"
#include "compactnn/tensor/transforms.h"
#include "test_util.h"

using namespace compactnn;
using namespace compactnn::testing;

TEST_CASE("tensor construction checks element counts") {
  CHECK_THROWS_AS(Tensor({2, 3}, Layout::kRowMajor2D, std::vector<float>(5)), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 3}, Layout::kNCHW), ShapeError);
  Tensor z({1, 2, 3, 4}, Layout::kNCHW);
  CHECK(z.size() == 24);
  CHECK(std::all_of(z.data().begin(), z.data().end(), [](float v) { return v == 0.0f; }));
  CHECK(z.logical_dims() == z.dims());
}

TEST_CASE("csr_from_dense examples") {
  SUBCASE("diagonal") {
    const auto s = CsrFromDense(Tensor::Matrix({{1, 0}, {0, 2}}));
    CHECK(s.values() == std::vector<float>{1, 2});
    CHECK(s.col_idx() == std::vector<std::uint32_t>{0, 1});
    CHECK(s.row_ptr() == std::vector<std::uint32_t>{0, 1, 2});
  }
  SUBCASE("all zero") {
    const auto s = CsrFromDense(Tensor::Matrix({{0, 0}, {0, 0}}));
    CHECK(s.values().empty());
    CHECK(s.row_ptr() == std::vector<std::uint32_t>{0, 0, 0});
    CHECK(s.sparsity() == 1.0);
  }
  SUBCASE("non-2-D input") {
    CHECK_THROWS_AS(CsrFromDense(Tensor({1, 1, 2, 2}, Layout::kNCHW)), ShapeError);
  }
}

TEST_CASE("csr_to_dense examples") {
  const SparseMatrixCSR s(1, 2, {5.0f}, {1}, {0, 1});
  CHECK(ToVector(CsrToDense(s)) == std::vector<float>{0, 5});
  const SparseMatrixCSR empty(3, 3, {}, {}, {0, 0, 0, 0});
  const Tensor d = CsrToDense(empty);
  CHECK(d.dims() == Shape{3, 3});
  CHECK(std::all_of(d.data().begin(), d.data().end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("csr invariants are enforced") {
  CHECK_THROWS_AS(SparseMatrixCSR(1, 2, {1.0f}, {1}, {1, 1}), FormatError);           // row_ptr[0]
  CHECK_THROWS_AS(SparseMatrixCSR(2, 2, {1.0f, 2.0f}, {0, 0}, {0, 2, 1}), FormatError);  // decreasing
  CHECK_THROWS_AS(SparseMatrixCSR(1, 3, {1.0f, 2.0f}, {2, 1}, {0, 2}), FormatError);  // col order
  CHECK_THROWS_AS(SparseMatrixCSR(1, 2, {1.0f}, {2}, {0, 1}), FormatError);           // col range
  CHECK_THROWS_AS(SparseMatrixCSR(1, 2, {0.0f}, {0}, {0, 1}), FormatError);           // stored zero
  CHECK_THROWS_AS(SparseMatrixCSR(1, 2, {1.0f}, {0}, {0, 2}), FormatError);           // nnz mismatch
}

TEST_CASE("csr round-trip is bit-exact on random matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> dim(1, 24);
    const Tensor m = RandomSparseMatrix(dim(rng), dim(rng), (trial % 10) / 10.0, rng);
    const auto s = CsrFromDense(m);
    CHECK(CsrToDense(s).BitEquals(m));
    const auto nnz = std::count_if(m.data().begin(), m.data().end(), [](float v) { return v != 0.0f; });
    CHECK(s.nnz() == nnz);
  }
  // Negative zero is a zero too and is not stored.
  const auto s = CsrFromDense(Tensor::Matrix({{-0.0f, 1.0f}}));
  CHECK(s.nnz() == 1);
}

TEST_CASE("pad_to_alignment") {
  std::mt19937_64 rng(3);
  const Tensor t = RandomTensor({1, 3, 5, 5}, Layout::kNCHW, rng);
  const Tensor p = PadToAlignment(t, 4, 1);
  CHECK(p.dims() == Shape{1, 4, 5, 5});
  CHECK(p.logical_dims() == Shape{1, 3, 5, 5});
  for (int h = 0; h < 5; ++h)
    for (int w = 0; w < 5; ++w) {
      CHECK(p.at4(0, 3, h, w) == 0.0f);
      for (int c = 0; c < 3; ++c) CHECK(p.at4(0, c, h, w) == t.at4(0, c, h, w));
    }
  CHECK(PadToAlignment(p, 4, 1).BitEquals(p));
  CHECK(PadToAlignment(t, 1, 2).BitEquals(t));
  CHECK_THROWS_AS(PadToAlignment(t, 4, 4), ShapeError);
}

TEST_CASE("transform_layout") {
  SUBCASE("two channels of one pixel") {
    const Tensor t({1, 2, 1, 1}, Layout::kNCHW, {1.5f, -2.5f});
    const Tensor u = TransformLayout(t, Layout::kNHWC);
    CHECK(u.layout() == Layout::kNHWC);
    CHECK(u.dims() == Shape{1, 1, 1, 2});
    CHECK(ToVector(u) == std::vector<float>{1.5f, -2.5f});
    CHECK(u.at4(0, 1, 0, 0) == -2.5f);
  }
  SUBCASE("identity") {
    std::mt19937_64 rng(5);
    const Tensor t = RandomTensor({2, 3, 4, 5}, Layout::kNCHW, rng);
    CHECK(TransformLayout(t, Layout::kNCHW).BitEquals(t));
    CHECK(TransformLayout(TransformLayout(t, Layout::kNHWC), Layout::kNCHW).BitEquals(t));
  }
  SUBCASE("2-D tensors have no 4-D layout") {
    CHECK_THROWS_AS(TransformLayout(Tensor::Matrix({{1}}), Layout::kNHWC), UnsupportedError);
  }
}

TEST_CASE("layout round-trip is exhaustive up to extent 8") {
  // Every element carries its own flat index, so the check is an index map.
  std::size_t shapes = 0;
  bool all_ok = true;
  for (int n = 1; n <= 8; ++n)
    for (int c = 1; c <= 8; ++c)
      for (int h = 1; h <= 8; ++h)
        for (int w = 1; w <= 8; ++w) {
          std::vector<float> v(static_cast<std::size_t>(n * c * h * w));
          for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
          const Tensor t({n, c, h, w}, Layout::kNCHW, v);
          const Tensor u = TransformLayout(t, Layout::kNHWC);
          for (int in = 0; in < n && all_ok; ++in)
            for (int ic = 0; ic < c; ++ic)
              for (int ih = 0; ih < h; ++ih)
                for (int iw = 0; iw < w; ++iw)
                  all_ok &= u[((in * h + ih) * w + iw) * c + ic] == t.at4(in, ic, ih, iw);
          all_ok &= TransformLayout(u, Layout::kNCHW).BitEquals(t);
          ++shapes;
        }
  CHECK(shapes == 4096);
  CHECK(all_ok);
}

TEST_CASE("im2col") {
  std::mt19937_64 rng(9);
  SUBCASE("pointwise is a reshape") {
    const Tensor x = RandomTensor({1, 3, 4, 5}, Layout::kNCHW, rng);
    const Tensor cols = Im2Col(x, 1, 1, 1, 0);
    CHECK(cols.dims() == Shape{3, 20});
    CHECK(ToVector(cols) == ToVector(x));
  }
  SUBCASE("kernel covering the input gives one column") {
    const Tensor x = RandomTensor({1, 2, 3, 3}, Layout::kNCHW, rng);
    const Tensor cols = Im2Col(x, 3, 3, 1, 0);
    CHECK(cols.dims() == Shape{18, 1});
    CHECK(ToVector(cols) == ToVector(x));
  }
  SUBCASE("padding cells are zero") {
    const Tensor x({1, 1, 1, 1}, Layout::kNCHW, {7.0f});
    const Tensor cols = Im2Col(x, 3, 3, 1, 1);
    CHECK(cols.dims() == Shape{9, 1});
    CHECK(ToVector(cols) == std::vector<float>{0, 0, 0, 0, 7, 0, 0, 0, 0});
  }
  SUBCASE("errors") {
    const Tensor x = RandomTensor({1, 1, 3, 3}, Layout::kNCHW, rng);
    CHECK_THROWS_AS(Im2Col(x, 3, 3, 0, 0), ShapeError);
    CHECK_THROWS_AS(Im2Col(x, 5, 5, 1, 0), ShapeError);
    CHECK_NOTHROW(Im2Col(x, 5, 5, 1, 1));
  }
  CHECK(ConvOutputExtent(224, 3, 2, 1) == 112);
  CHECK(ConvOutputExtent(7, 7, 1, 0) == 1);
}

TEST_CASE("tile packing") {
  std::mt19937_64 rng(21);
  SUBCASE("one tile covering the matrix is the identity permutation") {
    const auto s = CsrFromDense(RandomSparseMatrix(9, 13, 0.6, rng));
    const TilePacking p = BuildTilePacking(s, 16, 16);
    for (std::size_t i = 0; i < p.order.size(); ++i) CHECK(p.order[i] == i);
    CHECK(p.packed_values == s.values());
  }
  SUBCASE("4x4 with 2x2 tiles holds each nonzero once") {
    const auto s = CsrFromDense(Tensor::Matrix({{1, 0, 2, 0}, {0, 3, 0, 4}, {5, 6, 0, 0}, {0, 0, 7, 8}}));
    const TilePacking p = BuildTilePacking(s, 2, 2);
    CHECK(p.group_ptr.size() == 5);
    std::vector<std::uint32_t> sorted = p.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
    // Group (0,0) holds (0,0)=1 and (1,1)=3.
    CHECK(std::vector<float>(p.packed_values.begin() + p.group_ptr[0],
                             p.packed_values.begin() + p.group_ptr[1]) == std::vector<float>{1, 3});
    for (std::size_t q = 0; q < p.order.size(); ++q) {
      CHECK(p.packed_values[q] == s.values()[p.order[q]]);
      CHECK(p.packed_cols[q] == s.col_idx()[p.order[q]]);
    }
  }
}
