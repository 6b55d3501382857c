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

#ifndef COMPACTNN_TENSOR_SPARSE_MATRIX_H_
#define COMPACTNN_TENSOR_SPARSE_MATRIX_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "compactnn/tensor/tensor.h"

namespace compactnn {

// Grouping of a CSR matrix's nonzeros into (row-tile, col-tile) blocks.
// Groups are ordered row-tile major, then col-tile; inside a group entries
// keep CSR order (row, then column). The packed_* arrays hold the values in
// that order so a kernel can stream each block from contiguous memory.
struct TilePacking {
  std::int64_t tile_rows = 0;
  std::int64_t tile_cols = 0;
  std::int64_t matrix_rows = 0;
  std::int64_t matrix_cols = 0;
  // order[p] is the CSR value index stored at packed position p.
  std::vector<std::uint32_t> order;
  // Packed positions [group_ptr[g], group_ptr[g+1]) form group g, with
  // g = row_tile * num_col_tiles + col_tile.
  std::vector<std::uint32_t> group_ptr;
  std::vector<float> packed_values;
  std::vector<std::uint32_t> packed_rows;
  std::vector<std::uint32_t> packed_cols;

  std::int64_t num_row_tiles() const;
  std::int64_t num_col_tiles() const;
  bool operator==(const TilePacking&) const = default;
};

// Compressed sparse row matrix. Exact zeros are never stored.
class SparseMatrixCSR {
 public:
  SparseMatrixCSR() = default;
  // Validates every CSR invariant; throws FormatError on violation.
  SparseMatrixCSR(std::int64_t rows, std::int64_t cols,
                  std::vector<float> values, std::vector<std::uint32_t> col_idx,
                  std::vector<std::uint32_t> row_ptr);

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }
  const std::vector<float>& values() const { return values_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }
  const std::vector<std::uint32_t>& row_ptr() const { return row_ptr_; }

  // Fraction of zero entries.
  double sparsity() const;

  const std::optional<TilePacking>& packing() const { return packing_; }
  void set_packing(TilePacking packing) { packing_ = std::move(packing); }
  void clear_packing() { packing_.reset(); }

  // Bitwise equality of every array (packing included).
  bool BitEquals(const SparseMatrixCSR& other) const;

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<float> values_;
  std::vector<std::uint32_t> col_idx_;
  std::vector<std::uint32_t> row_ptr_{0};
  std::optional<TilePacking> packing_;
};

// Checks the CSR invariants and throws FormatError naming the first one
// that fails.
void ValidateCsr(std::int64_t rows, std::int64_t cols,
                 const std::vector<float>& values,
                 const std::vector<std::uint32_t>& col_idx,
                 const std::vector<std::uint32_t>& row_ptr);

SparseMatrixCSR CsrFromDense(const Tensor& m);
Tensor CsrToDense(const SparseMatrixCSR& s);

// Builds the (row-tile, col-tile) grouping of `s`.
TilePacking BuildTilePacking(const SparseMatrixCSR& s, std::int64_t tile_rows,
                             std::int64_t tile_cols);

}  // namespace compactnn

#endif  // COMPACTNN_TENSOR_SPARSE_MATRIX_H_
