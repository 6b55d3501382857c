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

#ifndef COMPACTNN_GRAPH_MODEL_FILE_H_
#define COMPACTNN_GRAPH_MODEL_FILE_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "compactnn/graph/graph.h"

namespace compactnn {

// CADM v1, all integers and floats little-endian:
//
//   "CADM" | u32 version=1 | u32 node count
//   per node:
//     u16 kind | u32 id | attr block | u8 weight tag (0 none, 1 dense, 2 CSR)
//     dense blob: u8 layout | u32 rank | rank x u64 dims
//                 | rank x u64 logical dims | f32 data
//     CSR blob:   u64 rows | u64 cols | u64 nnz | nnz x f32 values
//                 | nnz x u32 col_idx | (rows+1) x u32 row_ptr
//   u32 edge count | edge count x (u32 producer, u32 consumer)
//
// Attr blocks by kind ("bias" is u8 present, then u32 n and n x f32):
//   Input            u32 rank | rank x u64 dims
//   Conv2D, Depthwise u32 in, out, kh, kw, stride, padding | bias
//   FusedConvBnAct   u16 core kind | conv fields as above | u8 act | bias
//   BatchNorm        u32 channels | f32 eps | gamma, beta, mean, var (f32 each)
//   Activation       u8 act
//   Pool             u8 pool kind | u8 global | u32 window | u32 stride
//   FullyConnected   u32 in | u32 out | bias
//   Gemm             u32 in | u32 out | u8 act | bias
//   Add, Softmax     (empty)
//
// Tile packings are runtime state and are not persisted.
inline constexpr std::uint32_t kModelFileVersion = 1;

std::vector<std::uint8_t> SerializeModel(const Graph& g);
// Throws FormatError on bad magic/version/kind, CorruptionError when the
// buffer ends early or carries trailing bytes.
Graph DeserializeModel(const std::vector<std::uint8_t>& bytes);

void SaveModel(const Graph& g, const std::filesystem::path& path);
Graph LoadModel(const std::filesystem::path& path);

}  // namespace compactnn

#endif  // COMPACTNN_GRAPH_MODEL_FILE_H_
