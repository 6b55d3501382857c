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

#ifndef COMPACTNN_TENSOR_TENSOR_H_
#define COMPACTNN_TENSOR_TENSOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace compactnn {

using Shape = std::vector<std::int64_t>;

// Physical ordering of a tensor's dims. NCHW and NHWC are 4-D; a
// RowMajor2D tensor is a plain matrix.
enum class Layout : std::uint8_t { kNCHW = 0, kNHWC = 1, kRowMajor2D = 2 };

const char* LayoutName(Layout layout);

std::int64_t NumElements(const Shape& dims);
std::string ShapeToString(const Shape& dims);

// Dense array of 32-bit reals. `dims` are the physical extents in the order
// implied by `layout` (N,H,W,C for NHWC). `logical_dims` are the extents
// before any alignment padding; the padded cells are always zero.
class Tensor {
 public:
  Tensor() = default;
  // Zero-filled tensor.
  Tensor(Shape dims, Layout layout);
  Tensor(Shape dims, Layout layout, std::vector<float> data);
  Tensor(Shape dims, Shape logical_dims, Layout layout, std::vector<float> data);

  // A RowMajor2D tensor from nested rows; convenient in tests.
  static Tensor Matrix(const std::vector<std::vector<float>>& rows);

  const Shape& dims() const { return dims_; }
  const Shape& logical_dims() const { return logical_dims_; }
  Layout layout() const { return layout_; }
  std::size_t rank() const { return dims_.size(); }
  std::int64_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& storage() { return data_; }
  std::vector<float> release() { return std::move(data_); }

  float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // Matrix access for RowMajor2D tensors.
  float& at(std::int64_t r, std::int64_t c) { return data_[Offset2(r, c)]; }
  float at(std::int64_t r, std::int64_t c) const { return data_[Offset2(r, c)]; }

  // Element (n,c,h,w) regardless of whether the layout is NCHW or NHWC.
  float& at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data_[Offset4(n, c, h, w)];
  }
  float at4(std::int64_t n, std::int64_t c, std::int64_t h,
            std::int64_t w) const {
    return data_[Offset4(n, c, h, w)];
  }

  // Extents in canonical N,C,H,W order for either 4-D layout.
  std::int64_t batch() const;
  std::int64_t channels() const;
  std::int64_t height() const;
  std::int64_t width() const;

  // Same storage, new dims (and logical dims reset to match).
  Tensor Reshaped(Shape dims, Layout layout) const&;
  Tensor Reshaped(Shape dims, Layout layout) &&;

  // Bitwise equality of dims, logical dims, layout and every element.
  bool BitEquals(const Tensor& other) const;

 private:
  std::size_t Offset2(std::int64_t r, std::int64_t c) const {
    return static_cast<std::size_t>(r * dims_[1] + c);
  }
  std::size_t Offset4(std::int64_t n, std::int64_t c, std::int64_t h,
                      std::int64_t w) const;
  void Check() const;

  Shape dims_;
  Shape logical_dims_;
  Layout layout_ = Layout::kRowMajor2D;
  std::vector<float> data_;
};

}  // namespace compactnn

#endif  // COMPACTNN_TENSOR_TENSOR_H_
