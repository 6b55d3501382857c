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

#include "compactnn/tensor/sparse_matrix.h"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

#include "compactnn/common/error.h"

namespace compactnn {

namespace {

template <typename T>
bool BytesEqual(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

std::int64_t CeilDiv(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

std::int64_t TilePacking::num_row_tiles() const {
  return CeilDiv(matrix_rows, tile_rows);
}

std::int64_t TilePacking::num_col_tiles() const {
  return std::max<std::int64_t>(1, CeilDiv(matrix_cols, tile_cols));
}

void ValidateCsr(std::int64_t rows, std::int64_t cols,
                 const std::vector<float>& values,
                 const std::vector<std::uint32_t>& col_idx,
                 const std::vector<std::uint32_t>& row_ptr) {
  if (rows < 0 || cols < 0) throw FormatError("csr: negative extent");
  if (static_cast<std::int64_t>(row_ptr.size()) != rows + 1)
    throw FormatError("csr: row_ptr length " + std::to_string(row_ptr.size()) +
                      " != rows+1 (" + std::to_string(rows + 1) + ")");
  if (row_ptr[0] != 0) throw FormatError("csr: row_ptr[0] != 0");
  if (values.size() != col_idx.size())
    throw FormatError("csr: values and col_idx lengths differ");
  if (row_ptr.back() != values.size())
    throw FormatError("csr: row_ptr[rows] != nnz");
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto begin = row_ptr[static_cast<std::size_t>(r)];
    const auto end = row_ptr[static_cast<std::size_t>(r + 1)];
    if (end < begin) throw FormatError("csr: row_ptr decreases at row " + std::to_string(r));
    for (auto p = begin; p < end; ++p) {
      if (col_idx[p] >= cols)
        throw FormatError("csr: column index out of range in row " + std::to_string(r));
      if (p > begin && col_idx[p] <= col_idx[p - 1])
        throw FormatError("csr: column indices not strictly increasing in row " +
                          std::to_string(r));
      if (values[p] == 0.0f)
        throw FormatError("csr: explicit zero stored in row " + std::to_string(r));
    }
  }
}

SparseMatrixCSR::SparseMatrixCSR(std::int64_t rows, std::int64_t cols,
                                 std::vector<float> values,
                                 std::vector<std::uint32_t> col_idx,
                                 std::vector<std::uint32_t> row_ptr)
    : rows_(rows),
      cols_(cols),
      values_(std::move(values)),
      col_idx_(std::move(col_idx)),
      row_ptr_(std::move(row_ptr)) {
  ValidateCsr(rows_, cols_, values_, col_idx_, row_ptr_);
}

double SparseMatrixCSR::sparsity() const {
  const double total = static_cast<double>(rows_) * static_cast<double>(cols_);
  if (total == 0.0) return 0.0;
  return 1.0 - static_cast<double>(nnz()) / total;
}

bool SparseMatrixCSR::BitEquals(const SparseMatrixCSR& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ &&
         BytesEqual(values_, other.values_) &&
         BytesEqual(col_idx_, other.col_idx_) &&
         BytesEqual(row_ptr_, other.row_ptr_) && packing_ == other.packing_;
}

SparseMatrixCSR CsrFromDense(const Tensor& m) {
  if (m.rank() != 2 || m.layout() != Layout::kRowMajor2D)
    throw ShapeError("csr_from_dense expects a RowMajor2D matrix, got " +
                     ShapeToString(m.dims()));
  const std::int64_t rows = m.dim(0);
  const std::int64_t cols = m.dim(1);
  if (cols > std::numeric_limits<std::uint32_t>::max())
    throw ShapeError("csr_from_dense: too many columns");
  std::vector<float> values;
  std::vector<std::uint32_t> col_idx;
  std::vector<std::uint32_t> row_ptr;
  row_ptr.reserve(static_cast<std::size_t>(rows + 1));
  row_ptr.push_back(0);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      const float v = m.at(r, c);
      if (v != 0.0f) {
        values.push_back(v);
        col_idx.push_back(static_cast<std::uint32_t>(c));
      }
    }
    row_ptr.push_back(static_cast<std::uint32_t>(values.size()));
  }
  return SparseMatrixCSR(rows, cols, std::move(values), std::move(col_idx),
                         std::move(row_ptr));
}

Tensor CsrToDense(const SparseMatrixCSR& s) {
  ValidateCsr(s.rows(), s.cols(), s.values(), s.col_idx(), s.row_ptr());
  Tensor out({s.rows(), s.cols()}, Layout::kRowMajor2D);
  for (std::int64_t r = 0; r < s.rows(); ++r) {
    for (auto p = s.row_ptr()[static_cast<std::size_t>(r)];
         p < s.row_ptr()[static_cast<std::size_t>(r + 1)]; ++p) {
      out.at(r, s.col_idx()[p]) = s.values()[p];
    }
  }
  return out;
}

TilePacking BuildTilePacking(const SparseMatrixCSR& s, std::int64_t tile_rows,
                             std::int64_t tile_cols) {
  if (tile_rows < 1 || tile_cols < 1)
    throw ParameterError("tile extents must be positive");
  TilePacking pack;
  pack.tile_rows = tile_rows;
  pack.tile_cols = tile_cols;
  pack.matrix_rows = s.rows();
  pack.matrix_cols = s.cols();
  const std::int64_t row_tiles = pack.num_row_tiles();
  const std::int64_t col_tiles = pack.num_col_tiles();
  const auto groups = static_cast<std::size_t>(row_tiles * col_tiles);

  // Counting sort of value indices by group id; a stable pass keeps CSR
  // order (row, then column) inside each group.
  std::vector<std::uint32_t> counts(groups + 1, 0);
  const auto& rp = s.row_ptr();
  const auto& ci = s.col_idx();
  for (std::int64_t r = 0; r < s.rows(); ++r) {
    const std::int64_t rt = r / tile_rows;
    for (auto p = rp[static_cast<std::size_t>(r)]; p < rp[static_cast<std::size_t>(r + 1)]; ++p) {
      ++counts[static_cast<std::size_t>(rt * col_tiles + ci[p] / tile_cols) + 1];
    }
  }
  for (std::size_t g = 0; g < groups; ++g) counts[g + 1] += counts[g];
  pack.group_ptr = counts;
  std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
  const auto nnz = static_cast<std::size_t>(s.nnz());
  pack.order.resize(nnz);
  pack.packed_values.resize(nnz);
  pack.packed_rows.resize(nnz);
  pack.packed_cols.resize(nnz);
  for (std::int64_t r = 0; r < s.rows(); ++r) {
    const std::int64_t rt = r / tile_rows;
    for (auto p = rp[static_cast<std::size_t>(r)]; p < rp[static_cast<std::size_t>(r + 1)]; ++p) {
      const auto g = static_cast<std::size_t>(rt * col_tiles + ci[p] / tile_cols);
      const auto dst = cursor[g]++;
      pack.order[dst] = p;
      pack.packed_values[dst] = s.values()[p];
      pack.packed_rows[dst] = static_cast<std::uint32_t>(r);
      pack.packed_cols[dst] = ci[p];
    }
  }
  return pack;
}

}  // namespace compactnn
