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

#ifndef COMPACTNN_CLI_MNIST_IDX_H_
#define COMPACTNN_CLI_MNIST_IDX_H_

#include <cstdint>
#include <string>
#include <vector>

#include "compactnn/compress/dataset.h"

namespace compactnn {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Decoded IDX image file: `count` images of rows x cols unsigned bytes.
struct IdxImages {
  std::int64_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;
};

// Parsers over in-memory file contents. Wrong magic -> FormatError, a body
// shorter than the header promises -> CorruptionError. Trailing bytes are
// also rejected as corruption.
IdxImages ParseIdxImages(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> ParseIdxLabels(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> EncodeIdxImages(const IdxImages& images);
std::vector<std::uint8_t> EncodeIdxLabels(const std::vector<std::uint8_t>& labels);

// Images scaled by 1/255 into {1, rows, cols} samples. Label and image
// counts must agree (ConsistencyError); labels must be 0..9.
Dataset MakeMnistDataset(const IdxImages& images, const std::vector<std::uint8_t>& labels);
Dataset LoadMnistIdx(const std::string& images_path, const std::string& labels_path);
// Images only, labels set to -1 (inference inputs).
Dataset LoadIdxImagesAsDataset(const std::string& images_path);

std::vector<std::uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace compactnn

#endif  // COMPACTNN_CLI_MNIST_IDX_H_
