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

#ifndef COMPACTNN_COMPRESS_DATASET_H_
#define COMPACTNN_COMPRESS_DATASET_H_

#include <cstdint>
#include <vector>

#include "compactnn/tensor/tensor.h"

namespace compactnn {

// Labeled samples stored back to back. `sample_shape` excludes the batch
// extent, e.g. {1, 28, 28} for MNIST.
struct Dataset {
  Shape sample_shape;
  std::vector<float> images;
  std::vector<std::int32_t> labels;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  std::int64_t sample_size() const { return NumElements(sample_shape); }
  const float* sample(std::int64_t i) const { return images.data() + i * sample_size(); }

  // Samples [begin, begin + count), clamped to the dataset.
  Dataset Slice(std::int64_t begin, std::int64_t count) const;
};

}  // namespace compactnn

#endif  // COMPACTNN_COMPRESS_DATASET_H_
